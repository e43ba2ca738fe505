"""Spectral efficiency vs SNR for full-digital, PE-AltMin and discrete-phase hybrid designs."""
from _common import run_from_args

table = run_from_args("se_sweep.yaml", __doc__)
schemes = sorted({(r[1], r[2]) for r in table.rows})
print("snr_db  " + "  ".join(f"{m}/{res}" for m, res in schemes))
for snr in sorted(set(table.column("snr_db"))):
    se = {(r["method"], r["resolution"]): r["se_mean"] for r in table.select(snr_db=snr)}
    print(f"{snr:6.1f}  " + "  ".join(f"{se[s]:.2f}" for s in schemes))
