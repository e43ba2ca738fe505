"""Beam patterns of phase-quantized steering vectors at 15, 45 and 75 degree DoDs."""
from _common import run_from_args

table = run_from_args("beampattern.yaml", __doc__)
print("resolution  num_tx  dod  peak_deg  gain_at_dod_db")
keys = sorted({(r[0], r[1], r[2]) for r in table.rows}, key=lambda k: (k[0] != "inf", k))
for res, n_t, dod in keys:
    rows = table.select(resolution=res, num_tx=n_t, dod_deg=dod)
    peak = max(rows, key=lambda r: r["gain_db"])["angle_deg"]
    at = min(rows, key=lambda r: abs(r["angle_deg"] - dod))["gain_db"]
    print(f"{res:>10}  {n_t:6d}  {dod:3g}  {peak:8.1f}  {at:14.3f}")
