"""Energy efficiency vs number of RF chains for the three transmitter architectures."""
from _common import run_from_args

table = run_from_args("ee_sweep.yaml", __doc__)
print("num_rf  full_digital  ps_hybrid  pos_sw_hybrid   (bits/s/Hz/W)")
for n in sorted(set(table.column("num_rf"))):
    ee = {r["architecture"]: r["ee_mean"] for r in table.select(num_rf=n)}
    print(f"{n:6d}  {ee['full_digital']:12.3f}  {ee['ps_hybrid']:9.3f}  {ee['pos_sw_hybrid']:13.3f}")
