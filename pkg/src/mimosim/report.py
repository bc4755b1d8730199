"""Complexity tables and CSV/gnuplot emission for sweep results."""

from __future__ import annotations

import os
from dataclasses import dataclass

from .exceptions import SimError
from .numerics import inversion_cost, matmul_cost, svd_cost
from .sweep import BerRecord, TheoryRecord

# Reference PCA stage dimensions for the complexity table: CIR support of
# the full-scale cyclic prefix and the default realization buffer.
REPORT_MAX_DELAY_TAPS = 40
REPORT_BUFFER_SIZE = 20


@dataclass(frozen=True)
class ComplexityRow:
    n_antennas: int
    mmse_cubic: int        # leading-order N^3 (headline figure)
    lspca_quadratic: int   # leading-order N^2 (headline figure)
    mmse_mults: int
    mmse_adds: int
    lspca_mults: int
    lspca_adds: int


def complexity_report(
    antenna_list,
    max_delay_taps: int = REPORT_MAX_DELAY_TAPS,
    buffer_size: int = REPORT_BUFFER_SIZE,
) -> list[ComplexityRow]:
    """Modeled real-multiplication/addition counts per estimation.

    The MMSE column is the per-subcarrier cost of an N x N estimation with
    an N-slot pilot word: both Gram products, one N x N inversion, and the
    final product.  The LSPCA column is the antenna-scaling portion of the
    pipeline: one thin SVD of the (max_delay_taps, buffer_size) realization
    matrix per antenna pair, i.e. exactly N^2 SVDs.
    """
    rows = []
    svd_m, svd_a = svd_cost(max_delay_taps, buffer_size)
    for n in antenna_list:
        if n < 1:
            raise SimError(f"antenna count must be positive, got {n}")
        mm, ma = 0, 0
        for dims in ((n, n, n), (n, n, n), (n, n, n)):  # X X^H, X Y^H, bracket^-1 (X Y^H)
            m, a = matmul_cost(*dims)
            mm += m
            ma += a
        im, ia = inversion_cost(n)
        rows.append(
            ComplexityRow(
                n_antennas=n,
                mmse_cubic=n**3,
                lspca_quadratic=n**2,
                mmse_mults=mm + im,
                mmse_adds=ma + ia,
                lspca_mults=n * n * svd_m,
                lspca_adds=n * n * svd_a,
            )
        )
    return rows


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write(path: str, lines: list[str]) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise SimError(f"cannot write {path}: {exc}") from exc


def _record_row(rec: BerRecord, x_field: str) -> str:
    x = rec.ebn0_db if x_field == "ebn0_db" else rec.doppler_hz
    other = rec.doppler_hz if x_field == "ebn0_db" else rec.ebn0_db
    cols = [rec.estimator, _fmt(x), _fmt(other), str(rec.bits_sent), str(rec.bit_errors),
            _fmt(rec.ber), str(rec.op_mults), str(rec.op_adds), _fmt(rec.capped)]
    return ",".join(cols)


def _theory_row(rec: TheoryRecord) -> str:
    return ",".join([rec.estimator, _fmt(rec.ebn0_db), "", "", "", _fmt(rec.ber), "", "", ""])


def emit_results(
    records: list[BerRecord],
    out_dir: str,
    theory: list[TheoryRecord] | None = None,
) -> list[str]:
    """Write one CSV per figure-style view plus a gnuplot script.

    Returns the written paths.  Re-running on identical records produces
    byte-identical files (no timestamps, stable ordering and formatting).
    """
    os.makedirs(out_dir, exist_ok=True)
    theory = theory or []
    written: list[str] = []
    ebn0_header = "estimator,ebn0_db,doppler_hz,bits_sent,bit_errors,ber,op_mults,op_adds,capped"
    doppler_header = "estimator,doppler_hz,ebn0_db,bits_sent,bit_errors,ber,op_mults,op_adds,capped"
    if not records:
        for name, header in (("ber_vs_ebn0.csv", ebn0_header),
                             ("ber_vs_doppler.csv", doppler_header)):
            path = os.path.join(out_dir, name)
            _write(path, [header])
            written.append(path)
        return written

    def sort_key(rec: BerRecord):
        return (rec.estimator, rec.doppler_hz, rec.ebn0_db)

    ordered = sorted(records, key=sort_key)
    for fd in sorted({r.doppler_hz for r in ordered}):
        rows = [ebn0_header]
        rows += [_record_row(r, "ebn0_db") for r in ordered if r.doppler_hz == fd]
        rows += [_theory_row(t) for t in sorted(theory, key=lambda t: (t.estimator, t.ebn0_db))]
        path = os.path.join(out_dir, f"ber_vs_ebn0__fd_{_fmt(fd)}.csv")
        _write(path, rows)
        written.append(path)
    for ebn0 in sorted({r.ebn0_db for r in ordered}):
        rows = [doppler_header]
        rows += [
            _record_row(r, "doppler_hz") for r in sorted(ordered, key=sort_key)
            if r.ebn0_db == ebn0
        ]
        path = os.path.join(out_dir, f"ber_vs_doppler__ebn0_{_fmt(ebn0)}.csv")
        _write(path, rows)
        written.append(path)
    curves = sorted({r.estimator for r in ordered} | {t.estimator for t in theory})
    written.append(write_gnuplot_script(out_dir, written, curves))
    return written


def write_complexity_csv(rows: list[ComplexityRow], path: str) -> str:
    lines = ["n,mmse_cubic,lspca_quadratic,mmse_mults,mmse_adds,lspca_mults,lspca_adds"]
    for r in rows:
        lines.append(
            f"{r.n_antennas},{r.mmse_cubic},{r.lspca_quadratic},"
            f"{r.mmse_mults},{r.mmse_adds},{r.lspca_mults},{r.lspca_adds}"
        )
    _write(path, lines)
    return path


def write_gnuplot_script(out_dir: str, csv_paths: list[str], curves: list[str]) -> str:
    """Gnuplot script plotting every emitted BER view, one series per curve."""
    lines = [
        "set datafile separator ','",
        "set logscale y",
        "set grid",
        "set key outside",
        "set ylabel 'BER'",
    ]
    for path in csv_paths:
        name = os.path.basename(path)
        if name.startswith("ber_vs_ebn0"):
            xlabel = "Eb/N0 [dB]"
        elif name.startswith("ber_vs_doppler"):
            xlabel = "Doppler [Hz]"
        else:
            continue
        series = ", \\\n     ".join(
            f"'{name}' using (strcol(1) eq '{c}' ? column(2) : NaN):6 "
            f"with linespoints title '{c}'"
            for c in curves
        )
        lines += [f"set xlabel '{xlabel}'", f"set title '{name}'", f"plot {series}", "pause -1"]
    path = os.path.join(out_dir, "plots.gp")
    _write(path, lines)
    return path
