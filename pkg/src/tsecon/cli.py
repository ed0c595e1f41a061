"""Command-line entry point: ``tsecon run | fetch | plots``.

Exit codes: 0 success, 1 one or more pipeline stages failed (listed on
stderr), 2 configuration, data or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import os
import shutil
import sys
import urllib.error
import urllib.request
from pathlib import Path
from typing import Sequence

from .dataframe import MonthStamp
from .errors import MissingArtifact, NetworkError, SchemaError, TsEconError

SNAPSHOT_NAME = "imf_dubai_gasus_1992_2018.csv"
PLOT_FILES = ("fig2_cusum.csv", "fig3_roots.csv", "fig4_irf.csv", "fig5_fevd.csv", "fig5_hd.csv")
_DATE_HEADERS = {"date", "month", "period", "observation_date", "time"}


# ---------------------------------------------------------------------------
# fetch


def _sniff(body: bytes) -> list[str]:
    """Header of a monthly CSV payload; raises SchemaError for anything else."""
    text = body.decode("utf-8-sig", errors="replace")
    head = text.lstrip()[:512].lower()
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if head.startswith("<") or "<html" in head or "<!doctype" in head:
        raise SchemaError(f"response is HTML, not CSV; header: {[first[:80]]}")
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise SchemaError(f"no data rows; header: {rows[0] if rows else []}")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise SchemaError(f"need a date column and at least one value column; header: {header}")
    date_ok = header[0].lower() in _DATE_HEADERS
    if not date_ok:
        try:
            MonthStamp.parse(rows[1][0])
            date_ok = True
        except ValueError:
            pass
    if not date_ok:
        raise SchemaError(f"first column is not a monthly date; header: {header}")
    return header


def _bundled_snapshot() -> Path:
    return Path(__file__).resolve().parents[2] / "data" / SNAPSHOT_NAME


def fetch(url: str, out_path, timeout: float = 30.0, quiet: bool = False) -> str:
    """Download a CSV to ``out_path`` and return its SHA-256.

    The payload is checked before anything is written; the bundled snapshot
    is never overwritten.
    """
    out = Path(out_path).resolve()
    if out == _bundled_snapshot():
        raise TsEconError(f"refusing to overwrite the bundled snapshot {out}")
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            body = resp.read()
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise NetworkError(f"cannot fetch {url}: {exc}") from None
    _sniff(body)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".part")
    tmp.write_bytes(body)
    os.replace(tmp, out)
    digest = hashlib.sha256(body).hexdigest()
    if not quiet:
        print(f"{digest}  {out}")
    return digest


# ---------------------------------------------------------------------------
# plots


def _read(path: Path) -> list[dict[str, str]]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def _num(s: str) -> float:
    return float("nan") if s in ("", "NA") else float(s)


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Panel:
    """One chart area mapping data coordinates onto an SVG box."""

    def __init__(self, x0, y0, w, h, xlim, ylim, title):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        lo, hi = ylim
        if not hi > lo:
            lo, hi = lo - 1.0, hi + 1.0
        xl, xh = xlim
        if not xh > xl:
            xl, xh = xl - 1.0, xh + 1.0
        self.xlim, self.ylim = (xl, xh), (lo, hi)
        self.parts = [
            f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(w)}" height="{_f(h)}" fill="none" stroke="#444"/>',
            f'<text x="{_f(x0 + w / 2)}" y="{_f(y0 - 6)}" text-anchor="middle" font-size="12">{_esc(title)}</text>',
            f'<text x="{_f(x0 - 4)}" y="{_f(y0 + 10)}" text-anchor="end" font-size="9">{hi:.3g}</text>',
            f'<text x="{_f(x0 - 4)}" y="{_f(y0 + h)}" text-anchor="end" font-size="9">{lo:.3g}</text>',
        ]
        if lo < 0 < hi:
            self.hline(0.0, "#bbb")

    def px(self, x):
        return self.x0 + (x - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * self.w

    def py(self, y):
        return self.y0 + self.h - (y - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * self.h

    def hline(self, y, color):
        self.parts.append(f'<line x1="{_f(self.x0)}" y1="{_f(self.py(y))}" x2="{_f(self.x0 + self.w)}" '
                          f'y2="{_f(self.py(y))}" stroke="{color}"/>')

    def line(self, xs, ys, color, dash=False, cls="series"):
        pts = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, ys) if y == y)
        extra = ' stroke-dasharray="4 3"' if dash else ""
        self.parts.append(f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}"{extra}/>')

    def band(self, xs, lo, hi, color):
        up = [f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, hi)]
        dn = [f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(reversed(xs), reversed(lo))]
        self.parts.append(f'<polygon class="band" points="{" ".join(up + dn)}" fill="{color}" '
                          f'fill-opacity="0.25" stroke="none"/>')


_COLORS = ("#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#7f8c8d")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _svg(width, height, body: list[str]) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">\n' + "\n".join(body) + "\n</svg>\n")


def _limits(*arrays) -> tuple[float, float]:
    vals = [v for a in arrays for v in a if v == v]
    return (min(vals), max(vals)) if vals else (0.0, 1.0)


def _grid(n_panels, cols, pw=320, ph=200, mx=60, my=40):
    rows = (n_panels + cols - 1) // cols
    boxes = [(mx + (i % cols) * (pw + mx), my + (i // cols) * (ph + my), pw, ph) for i in range(n_panels)]
    return boxes, mx + cols * (pw + mx), my + rows * (ph + my)


def _render_cusum(rows) -> str:
    kinds = sorted({r["kind"] for r in rows})
    boxes, W, H = _grid(len(kinds), len(kinds))
    body = []
    for kind, box in zip(kinds, boxes):
        rs = [r for r in rows if r["kind"] == kind]
        x = [_num(r["step"]) for r in rs]
        v, lo, hi = ([_num(r[c]) for r in rs] for c in ("statistic", "lower", "upper"))
        p = _Panel(*box, _limits(x), _limits(v, lo, hi), f"{kind.upper()} (5% bands)")
        p.line(x, lo, "#c0392b", dash=True, cls="bound")
        p.line(x, hi, "#c0392b", dash=True, cls="bound")
        p.line(x, v, _COLORS[0])
        body += p.parts
    return _svg(W, H, body)


def _render_roots(rows) -> str:
    size, pad = 360, 40
    p = _Panel(pad, pad, size, size, (-1.25, 1.25), (-1.25, 1.25), "Inverse roots of the AR polynomial")
    cx, cy, r = p.px(0.0), p.py(0.0), p.px(1.0) - p.px(0.0)
    p.parts.append(f'<circle class="unit-circle" cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(r)}" fill="none" '
                   f'stroke="#444"/>')
    p.parts.append(f'<line x1="{_f(p.px(-1.25))}" y1="{_f(cy)}" x2="{_f(p.px(1.25))}" y2="{_f(cy)}" stroke="#bbb"/>')
    p.parts.append(f'<line x1="{_f(cx)}" y1="{_f(p.py(-1.25))}" x2="{_f(cx)}" y2="{_f(p.py(1.25))}" stroke="#bbb"/>')
    for row in rows:
        re_, im = _num(row["real"]), _num(row["imag"])
        p.parts.append(f'<circle class="root" cx="{_f(p.px(re_))}" cy="{_f(p.py(im))}" r="3.5" '
                       f'fill="{_COLORS[0]}"/>')
    return _svg(size + 2 * pad, size + 2 * pad, p.parts)


def _render_irf(rows) -> str:
    shocks = list(dict.fromkeys(r["shock"] for r in rows))
    variables = list(dict.fromkeys(r["variable"] for r in rows))
    pairs = [(s, v) for v in variables for s in shocks]
    boxes, W, H = _grid(len(pairs), len(shocks))
    body = []
    for (s, v), box in zip(pairs, boxes):
        rs = [r for r in rows if r["shock"] == s and r["variable"] == v]
        x = [_num(r["horizon"]) for r in rs]
        val, lo, hi = ([_num(r[c]) for r in rs] for c in ("value", "lower", "upper"))
        p = _Panel(*box, _limits(x), _limits(val, lo, hi), f"Response of {v} to {s}")
        if all(a == a for a in lo + hi):
            p.band(x, lo, hi, _COLORS[0])
            p.line(x, lo, _COLORS[1], dash=True, cls="bound")
            p.line(x, hi, _COLORS[1], dash=True, cls="bound")
        p.line(x, val, _COLORS[0])
        body += p.parts
    return _svg(W, H, body)


def _render_grouped(rows, panel_key, series_key, x_key, y_key, title, x_is_date=False) -> str:
    panels = list(dict.fromkeys(r[panel_key] for r in rows))
    boxes, W, H = _grid(len(panels), 1, pw=560)
    body = []
    for name, box in zip(panels, boxes):
        rs = [r for r in rows if r[panel_key] == name]
        groups = list(dict.fromkeys(r[series_key] for r in rs))
        xs_all = sorted({r[x_key] for r in rs})
        xmap = {x: i for i, x in enumerate(xs_all)} if x_is_date else None
        data = {}
        for g in groups:
            gr = [r for r in rs if r[series_key] == g]
            x = [xmap[r[x_key]] if xmap else _num(r[x_key]) for r in gr]
            data[g] = (x, [_num(r[y_key]) for r in gr])
        xlim = _limits(*(d[0] for d in data.values()))
        ylim = _limits(*(d[1] for d in data.values()))
        p = _Panel(*box, xlim, ylim, f"{title}: {name}")
        for i, g in enumerate(groups):
            p.line(*data[g], _COLORS[i % len(_COLORS)])
            lx, ly = box[0] + box[2] + 6, box[1] + 12 + 14 * i
            p.parts.append(f'<text x="{_f(lx)}" y="{_f(ly)}" font-size="9" '
                           f'fill="{_COLORS[i % len(_COLORS)]}">{_esc(g)}</text>')
        body += p.parts
    return _svg(W + 120, H, body)


def _render(name: str, rows) -> str:
    if name == "fig2_cusum.csv":
        return _render_cusum(rows)
    if name == "fig3_roots.csv":
        return _render_roots(rows)
    if name == "fig4_irf.csv":
        return _render_irf(rows)
    if name == "fig5_fevd.csv":
        return _render_grouped(rows, "variable", "shock", "horizon", "share", "Variance share")
    return _render_grouped(rows, "variable", "component", "date", "value", "Historical decomposition",
                           x_is_date=True)


def emit_plots(bundle_dir, fmt: str = "svg", out_dir=None) -> list[Path]:
    """Write one plot file per figure CSV present in the bundle.

    ``csv`` copies the plot data unchanged; ``svg`` renders static charts.
    """
    if fmt not in ("csv", "svg"):
        raise ValueError("format must be 'csv' or 'svg'")
    bundle_dir = Path(bundle_dir)
    present = [n for n in PLOT_FILES if (bundle_dir / n).is_file()]
    if not present:
        raise MissingArtifact(f"no plot data ({', '.join(PLOT_FILES)}) in {bundle_dir}")
    out_dir = Path(out_dir) if out_dir is not None else bundle_dir / "plots"
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in present:
        src = bundle_dir / name
        if fmt == "csv":
            dst = out_dir / name
            shutil.copyfile(src, dst)
        else:
            rows = _read(src)
            if not rows:
                raise MissingArtifact(f"{src} has no rows")
            dst = out_dir / (Path(name).stem + ".svg")
            dst.write_text(_render(name, rows))
        written.append(dst)
    return written


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsecon", description="Time-series econometrics pipeline")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a pipeline config (or re-run a bundle manifest)")
    r.add_argument("config")
    r.add_argument("--output", help="bundle directory (overrides output_dir)")
    r.add_argument("--data", help="CSV to use instead of the configured data source")
    f = sub.add_parser("fetch", help="download a CSV and print its checksum")
    f.add_argument("url")
    f.add_argument("out")
    p = sub.add_parser("plots", help="emit plot files from a bundle")
    p.add_argument("bundle")
    p.add_argument("--format", choices=("csv", "svg"), default="svg")
    p.add_argument("--out", help="output directory (default <bundle>/plots)")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            from .pipeline import load_config, run_pipeline

            bundle = run_pipeline(load_config(args.config), args.output, args.data)
            print(bundle.directory)
            if not bundle.ok:
                for st in bundle.failed_stages:
                    print(f"stage {st} failed: {bundle.report['stages'][st]['error']}", file=sys.stderr)
                print(f"failed stages: {', '.join(bundle.failed_stages)}", file=sys.stderr)
                return 1
            return 0
        if args.command == "fetch":
            fetch(args.url, args.out)
            return 0
        for path in emit_plots(args.bundle, args.format, args.out):
            print(path)
        return 0
    except TsEconError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
