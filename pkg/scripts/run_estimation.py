"""OMP channel estimation: NMSE, support recovery and training coherence per training kind."""
from _common import run_from_args

table = run_from_args("estimation.yaml", __doc__)
print(f"{'snr_db':>6}  {'kind':<26} {'nmse':>10} {'recovery':>9} {'coherence':>9}")
for r in table.select():
    print(f"{r['snr_db']:6g}  {r['kind']:<26} {r['nmse_mean']:10.3g} {r['support_recovery']:9.3f} "
          f"{r['coherence_mean']:9.3f}")
