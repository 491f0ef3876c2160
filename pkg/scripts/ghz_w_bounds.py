"""GME lower bounds for GHZ_n and W_n from the projector witness cI - |psi><psi|.

    python3 scripts/ghz_w_bounds.py --max-n 6
"""
import argparse
import math

from witness_bounds.entanglement import GMEBoundReport, ghz_w_report, pure_gme_measures, MEASURES
from witness_bounds.states import ghz_state, w_state


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--max-n", type=int, default=5)
    args = ap.parse_args()
    print(",".join(GMEBoundReport.CSV_HEADER) + ",C_exact,E_f_exact,E_g_exact")
    for n in range(3, args.max_n + 1):
        for rep, psi in zip(ghz_w_report(n), (ghz_state(n), w_state(n))):
            exact = pure_gme_measures(psi)
            cells = [rep.state] + [f"{x:.6g}" for x in rep.csv_row()[1:]] + [f"{exact[k]:.6g}" for k in MEASURES]
            print(",".join(cells))
    # closed forms for n = 3
    x = 0.5 * math.sqrt(8 / 7)
    print(f"# ghz3 closed form: D_sep={x:.6f} C={math.sqrt(2) * x:.6f} E_f={math.log2(7 / 5):.6f} E_g={2 / 7:.6f}")


if __name__ == "__main__":
    main()
