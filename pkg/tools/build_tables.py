"""Regenerate the embedded critical-value tables in src/tsecon/data.

Published values are transcribed with their source; everything else is drawn
with the seeded simulators in :mod:`tsecon.criticalvalues`.  MacKinnon's
response-surface coefficients are read from statsmodels' transcription of the
1994/2010 papers.

    python tools/build_tables.py            # full rebuild (about 20 minutes on one core)
    python tools/build_tables.py --quick    # small replication counts, for smoke tests
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import time
from pathlib import Path

import numpy as np

from tsecon import criticalvalues as cv
from tsecon.criticalvalues import GRID_PROBS, INF, Record

DATA = Path(__file__).resolve().parents[1] / "src" / "tsecon" / "data"
SEED = 20190101

KPSS = "Kwiatkowski, Phillips, Schmidt and Shin (1992) Table 1"
ERS = "Elliott, Rothenberg and Stock (1996) Table 1"
ZA = "Zivot and Andrews (1992) Tables 2-4"
VOG = "Vogelsang (1993) asymptotic, trend and intercept break, min-t"
LS1 = "Lee and Strazicich (2003) Table 1"
LS2 = "Lee and Strazicich (2003) Table 2"
GH = "Gregory and Hansen (1996a) Table 1, (1996b) Table 1, m=1"
MHM = "MacKinnon, Haug and Michelis (1999)"
PSS = "Pesaran, Shin and Smith (2001) Tables CI/CII"


def published() -> list[Record]:
    recs: list[Record] = []

    def add(fam, case, k, n, table, src, bound=""):
        for lv, v in table.items():
            recs.append(Record(fam, case, k, n, lv, bound, v, src))

    add("kpss", "c", 1, INF, {0.10: 0.347, 0.05: 0.463, 0.025: 0.574, 0.01: 0.739}, KPSS)
    add("kpss", "ct", 1, INF, {0.10: 0.119, 0.05: 0.146, 0.025: 0.176, 0.01: 0.216}, KPSS)

    ers = {
        "c": {50: (1.87, 2.97, 3.91), 100: (1.95, 3.11, 4.17), 200: (1.91, 3.17, 4.33), INF: (1.99, 3.26, 4.48)},
        "ct": {50: (4.22, 5.72, 6.77), 100: (4.26, 5.64, 6.79), 200: (4.05, 5.66, 6.86), INF: (3.96, 5.62, 6.89)},
    }
    for case, rows in ers.items():
        for n, (a, b, c) in rows.items():
            add("ers", case, 1, n, {0.01: a, 0.05: b, 0.10: c}, ERS)
    dfgls = {50: (-3.77, -3.19, -2.89), 100: (-3.58, -3.03, -2.74), 200: (-3.46, -2.93, -2.64), INF: (-3.48, -2.89, -2.57)}
    for n, (a, b, c) in dfgls.items():
        add("dfgls", "ct", 1, n, {0.01: a, 0.05: b, 0.10: c}, ERS)

    for case, (a, b, c) in {"crash": (-5.34, -4.80, -4.58), "trend": (-4.93, -4.42, -4.11),
                            "both": (-5.57, -5.08, -4.82)}.items():
        add("za", case, 1, INF, {0.01: a, 0.05: b, 0.10: c}, ZA)
    for fam in ("perron_io", "perron_ao"):
        add(fam, "both", 1, INF, {0.01: -5.719131, 0.05: -5.175710, 0.10: -4.893950}, VOG)
    add("ls_crash", "", 1, INF, {0.01: -4.545, 0.05: -3.842, 0.10: -3.504}, LS1)
    for (l1, l2), (a, b, c) in {
        (0.2, 0.4): (-6.16, -5.59, -5.27), (0.2, 0.6): (-6.41, -5.74, -5.32), (0.2, 0.8): (-6.33, -5.71, -5.33),
        (0.4, 0.6): (-6.45, -5.67, -5.31), (0.4, 0.8): (-6.42, -5.65, -5.32), (0.6, 0.8): (-6.32, -5.73, -5.32),
    }.items():
        add("ls_break", f"{l1}-{l2}", 1, INF, {0.01: a, 0.05: b, 0.10: c}, LS2)

    gh = {
        "C": ((-5.13, -4.83, -4.61, -4.34), (-50.07, -45.01, -40.48, -36.19)),
        "C/T": ((-5.45, -5.21, -4.99, -4.72), (-57.28, -52.09, -47.96, -43.22)),
        "C/S": ((-5.47, -5.19, -4.95, -4.68), (-57.17, -51.32, -47.04, -41.85)),
        "C/S/T": ((-6.02, -5.72, -5.50, -5.24), (-69.37, -63.60, -58.58, -53.31)),
    }
    for case, (t, za) in gh.items():
        add("gh_t", case, 1, INF, dict(zip((0.01, 0.025, 0.05, 0.10), t)), GH)
        add("gh_za", case, 1, INF, dict(zip((0.01, 0.025, 0.05, 0.10), za)), GH)

    mhm = {
        "1": ((4.129906, 12.3209, 24.27596, 40.17493), (4.129906, 11.2248, 17.7973, 24.1592)),
        "2": ((9.164546, 20.26184, 35.19275, 54.07904), (9.164546, 15.8921, 22.29962, 28.58808)),
        "3": ((3.841466, 15.49471, 29.79707, 47.85613), (3.841466, 14.2646, 21.13162, 27.58434)),
        "4": ((12.51798, 25.87211, 42.91525, 63.8761), (12.51798, 19.38704, 25.82321, 32.11832)),
        "5": ((3.841466, 18.39771, 35.0109, 55.24578), (3.841466, 17.14769, 24.25202, 30.81507)),
    }
    for case, (tr, me) in mhm.items():
        for k in range(1, 5):
            recs.append(Record("johansen_trace", case, k, INF, 0.05, "", tr[k - 1], MHM))
            recs.append(Record("johansen_maxeig", case, k, INF, 0.05, "", me[k - 1], MHM))

    pss_f = {
        "I": {0.10: (2.44, 3.28), 0.05: (3.15, 4.11), 0.025: (3.88, 4.92), 0.01: (4.81, 6.02)},
        "III": {0.10: (4.04, 4.78), 0.05: (4.94, 5.73), 0.025: (5.77, 6.68), 0.01: (6.84, 7.84)},
        "V": {0.10: (5.59, 6.26), 0.05: (6.56, 7.30), 0.025: (7.46, 8.27), 0.01: (8.74, 9.63)},
    }
    pss_t = {
        "I": {0.10: (-1.62, -2.28), 0.05: (-1.95, -2.60), 0.025: (-2.24, -2.90), 0.01: (-2.58, -3.22)},
        "III": {0.10: (-2.57, -2.91), 0.05: (-2.86, -3.22), 0.025: (-3.13, -3.50), 0.01: (-3.43, -3.82)},
        "V": {0.10: (-3.13, -3.40), 0.05: (-3.41, -3.69), 0.025: (-3.65, -3.96), 0.01: (-3.96, -4.26)},
    }
    for fam, tab in (("bounds_f", pss_f), ("bounds_t", pss_t)):
        for case, rows in tab.items():
            for lv, (i0, i1) in rows.items():
                recs.append(Record(fam, case, 1, INF, lv, "I0", i0, PSS))
                recs.append(Record(fam, case, 1, INF, lv, "I1", i1, PSS))
    return recs


def johansen(reps, recs: list[Record], grids: list[tuple]) -> None:
    for case in ("1", "2", "3", "4", "5"):
        for m in range(1, 6):
            r = reps(40_000)
            tr, me = cv.chunked_draws(cv._sim_johansen, r, SEED + m, 400, case, m)
            src = f"simulated: n=400, {r} reps, seed {SEED + m}"
            for fam, d in (("johansen_trace", tr), ("johansen_maxeig", me)):
                grids += [(fam, case, m, "inf", p, float(np.quantile(d, p)), src) for p in GRID_PROBS]
                for lv in (0.01, 0.10):
                    recs.append(Record(fam, case, m, INF, lv, "", float(np.quantile(d, 1 - lv)), src))
                if m == 5:
                    recs.append(Record(fam, case, m, INF, 0.05, "", float(np.quantile(d, 0.95)), src))
            print("johansen", case, m, flush=True)


def simulated(quick: bool) -> tuple[list[Record], list[tuple]]:
    recs: list[Record] = []
    grids: list[tuple] = []
    scale = 0.05 if quick else 1.0

    def reps(r):
        return max(10_000, int(r * scale))

    levels = (0.01, 0.025, 0.05, 0.10)

    # p-value grids
    for case in ("c", "ct"):
        d = cv.simulate_statistics("kpss", {"n": 1000, "case": case}, reps(200_000), SEED)
        src = f"simulated: n=1000, {len(d)} reps, seed {SEED}"
        grids += [("kpss", case, 1, "inf", p, float(np.quantile(d, p)), src) for p in GRID_PROBS]
        print("kpss", case, np.quantile(d, 0.95), flush=True)
    johansen(reps, recs, grids)

    # bounds: asymptotic (n=1000) and small-sample n=30..80
    for case in cv.BOUNDS_CASES:
        for k in range(0, 6):
            for n, r, tag in [(1000, reps(20_000), INF)] + [(n, reps(20_000), n) for n in range(30, 81, 5)]:
                for integrated, bound in ((False, "I0"), (True, "I1")):
                    seed = SEED + 1000 * k + n + (7 if integrated else 0)
                    F, t = cv.chunked_draws(cv._sim_bounds, r, seed, n, case, k, integrated)
                    src = f"simulated: n={n}, {r} reps, seed {seed}"
                    for lv in levels:
                        recs.append(Record("bounds_f", case, k, tag, lv, bound, float(np.quantile(F, 1 - lv)), src))
                    if case in ("I", "III", "V"):
                        for lv in levels:
                            recs.append(Record("bounds_t", case, k, tag, lv, bound, float(np.quantile(t, lv)), src))
            print("bounds", case, k, flush=True)

    ms = list(range(3, 61)) + list(range(70, 201, 10)) + [250, 300, 400, 500, 750, 1000]
    for m in ms:
        d = cv.simulate_statistics("cusumq", {"m": m}, reps(100_000), SEED + m)
        src = f"simulated: two-sided max deviation, {len(d)} reps, seed {SEED + m}"
        for lv in (0.01, 0.05, 0.10):
            recs.append(Record("cusumq", "", 1, m, lv, "", float(np.quantile(d, 1 - lv)), src))
    print("cusumq done", flush=True)
    return recs, grids


def mackinnon_rows() -> list[tuple]:
    from statsmodels.tsa import adfvalues as a

    rows = []
    names = {"n": "nc", "c": "c", "ct": "ct", "ctt": "ctt"}
    for reg, nm in names.items():
        for N in range(1, 7):
            for kind in ("tau_min", "tau_max", "tau_star"):
                v = getattr(a, f"{kind}_{nm}")[N - 1]
                rows.append((kind, reg, N, 0, float(v)))
            for kind, attr in (("tau_smallp", f"tau_{nm}_smallp"), ("tau_largep", f"tau_{nm}_largep"),
                               ("z_smallp", f"z_{nm}_smallp"), ("z_largep", f"z_{nm}_largep")):
                for i, v in enumerate(np.asarray(getattr(a, attr))[N - 1]):
                    rows.append((kind, reg, N, i, float(v)))
            rows.append(("z_star", reg, N, 0, float(getattr(a, f"z_star_{nm}")[N - 1])))
        tab = a.tau_2010s[reg]
        for N in range(1, tab.shape[0] + 1):
            for li, lv in enumerate((0.01, 0.05, 0.10)):
                for i, v in enumerate(tab[N - 1, li]):
                    rows.append((f"tau2010_{lv!r}", reg, N, i, float(v)))
    return rows


def write_csv(path: Path, header: list[str], rows, comment: str):
    out = io.StringIO()
    out.write(f"# format-version: {cv.FORMAT_VERSION}\n")
    for line in comment.splitlines():
        out.write(f"# {line}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    path.write_text(out.getvalue())


def write_tables(recs: list[Record], grids: list[tuple]) -> None:
    recs = sorted(recs, key=lambda r: (r.family, r.case, r.k, r.n, r.bound, r.level, r.source))
    (DATA / "critical_values.csv").write_text(cv.format_records(
        recs, "Critical values; level is the rejection probability.\n"
              "Published entries carry their source; 'simulated' entries come from tools/build_tables.py."))
    write_csv(DATA / "quantile_grids.csv", ["family", "case", "k", "n", "prob", "value", "source"], grids,
              "Simulated null CDF grids (prob = P(stat <= value)) used for p-values.")


def refresh_johansen(quick: bool) -> None:
    scale = 0.05 if quick else 1.0
    fams = ("johansen_trace", "johansen_maxeig")
    recs = [r for r in cv.parse_records((DATA / "critical_values.csv").read_text())
            if not (r.family in fams and r.source.startswith("simulated"))]
    with open(DATA / "quantile_grids.csv", newline="") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))[1:]
    grids = [(f, c, int(k), n, float(p), float(v), src) for f, c, k, n, p, v, src in rows if f not in fams]
    new_grids: list[tuple] = []
    johansen(lambda r: max(10_000, int(r * scale)), recs, new_grids)
    write_tables(recs, grids + new_grids)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--only-mackinnon", action="store_true")
    ap.add_argument("--only-johansen", action="store_true",
                    help="redraw the simulated Johansen entries and keep everything else")
    args = ap.parse_args()
    DATA.mkdir(parents=True, exist_ok=True)
    write_csv(DATA / "mackinnon.csv", ["kind", "regression", "N", "index", "value"], mackinnon_rows(),
              "MacKinnon (1994) Tables 3-6 response surfaces (scaled) and MacKinnon (2010) critical-value surfaces.\n"
              "p = Phi(polyval(coef, stat)); z_smallp uses log(-stat).")
    if args.only_mackinnon:
        return
    t0 = time.time()
    if args.only_johansen:
        refresh_johansen(args.quick)
        print(f"done in {time.time() - t0:.0f}s")
        return
    sim, grids = simulated(args.quick)
    write_tables(published() + sim, grids)
    print(f"done in {time.time() - t0:.0f}s")


if __name__ == "__main__":
    main()
