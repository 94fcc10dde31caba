"""Command-line front end.

Subcommands: ``construct`` (build a frozen-set code and save its JSON spec),
``encode`` / ``decode`` (single codewords), ``analyze-bec`` (exact
first-error probabilities as CSV), ``fit-exponent`` (error-floor scaling fit
from the exact erasure bounds), and ``simulate`` (Monte Carlo FER/BER).

Exit codes: 0 on success, 2 on bad arguments, 1 on runtime failure.  All
files are UTF-8; CSV output uses a header row and ``.`` as the decimal
separator.  ``CONVPOLAR_THREADS`` caps simulation workers.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import channel as _channel
from .channel import ERASED, Channel, parse_channel
from .circuit import BOUNDARIES, FAMILIES, build_circuit, encode
from .erasure_exact import (
    fer_bounds,
    first_error_probs,
    fit_error_exponent,
    select_frozen_erasure,
)
from .scdecode import sc_decode
from .simulate import CodeSpec, make_code, run_mc

__all__ = ["main"]


class BadArguments(ValueError):
    """User input that argparse cannot catch: malformed values, bad files."""


def _channel_arg(text: str) -> Channel:
    try:
        return parse_channel(text)
    except ValueError as exc:
        raise BadArguments(str(exc)) from exc


def _rate_arg(text: str) -> Fraction:
    try:
        rate = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise BadArguments(f"bad rate {text!r}: expected a fraction like 1/2") from exc
    if not 0 <= rate <= 1:
        raise BadArguments(f"rate {text} is outside [0, 1]")
    return rate


def _dimension(rate: Fraction, n: int) -> int:
    k = rate * (1 << n)
    if k.denominator != 1:
        raise BadArguments(f"rate {rate} does not give a whole number of data bits at n={n}")
    return int(k)


def _load_code(path: str) -> CodeSpec:
    try:
        return CodeSpec.from_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise BadArguments(f"cannot read code spec {path!r}: {exc}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise BadArguments(f"bad code spec {path!r}: {exc}") from exc


def _parse_received(ch: Channel, text: str) -> np.ndarray:
    tokens = [t.strip() for t in text.split(",")]
    if ch.kind == "awgn":
        try:
            return np.array([float(t) for t in tokens])
        except ValueError as exc:
            raise BadArguments(f"bad AWGN symbol in --received: {exc}") from exc
    out = np.empty(len(tokens), dtype=np.int64)
    for i, tok in enumerate(tokens):
        if tok in ("0", "1"):
            out[i] = int(tok)
        elif ch.kind == "bec" and tok.lower() in ("e", "?"):
            out[i] = ERASED
        else:
            raise BadArguments(f"bad {ch.kind} symbol {tok!r} in --received")
    return out


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_construct(args) -> int:
    ch = _channel_arg(args.channel)
    k = _dimension(_rate_arg(args.rate), args.n)
    code = make_code(
        args.family, args.n, k, ch,
        boundary=args.boundary, method=args.method,
        samples=args.samples, seed=args.seed,
    )
    Path(args.out).write_text(code.to_json(), encoding="utf-8")
    print(f"{code.family} N={code.num_bits} k={code.k} "
          f"construction={code.construction} -> {args.out}")
    return 0


def _cmd_encode(args) -> int:
    code = _load_code(args.code)
    bits = args.data.strip()
    if len(bits) != code.k or set(bits) - {"0", "1"}:
        raise BadArguments(f"--data must be {code.k} characters of 0/1")
    x = np.zeros(code.num_bits, dtype=np.uint8)
    for pos, bit in zip(code.data_positions, bits):
        x[pos - 1] = int(bit)
    y = encode(code.circuit(), x)
    word = "".join(str(int(b)) for b in y)
    if args.out:
        Path(args.out).write_text(word + "\n", encoding="utf-8")
    else:
        print(word)
    return 0


def _cmd_decode(args) -> int:
    code = _load_code(args.code)
    ch = _channel_arg(args.channel)
    received = _parse_received(ch, args.received)
    if received.shape != (code.num_bits,):
        raise BadArguments(
            f"--received has {received.size} symbols, the code has {code.num_bits}"
        )
    priors = _channel.priors(ch, received)
    xhat = sc_decode(code.circuit(), priors, set(code.frozen))
    data = "".join(str(int(xhat[p - 1])) for p in code.data_positions)
    if args.out:
        Path(args.out).write_text(data + "\n", encoding="utf-8")
    else:
        print(data)
    return 0


def _cmd_analyze_bec(args) -> int:
    code = _load_code(args.code)
    if not 0.0 <= args.eps <= 1.0:
        raise BadArguments(f"--eps {args.eps} is outside [0, 1]")
    probs = first_error_probs(code.circuit(), args.eps)
    _write_csv(args.out, ["position", "p_first_error"],
               ((i + 1, repr(float(p))) for i, p in enumerate(probs)))
    lo, hi = fer_bounds(probs, code.data_positions)
    print(f"eps={args.eps:g} fer_lower={lo:.6g} fer_upper={hi:.6g} -> {args.out}")
    return 0


def _cmd_fit_exponent(args) -> int:
    rate = _rate_arg(args.rate)
    if not 0.0 < args.eps < 1.0:
        raise BadArguments(f"--eps {args.eps} is outside (0, 1)")
    if args.n_min > args.n_max:
        raise BadArguments("--n-min must not exceed --n-max")
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        k = _dimension(rate, n)
        probs = first_error_probs(build_circuit(args.family, n, args.boundary), args.eps)
        frozen = select_frozen_erasure(probs, k)
        data = tuple(sorted(set(range(1, (1 << n) + 1)) - frozen))
        lo, hi = fer_bounds(probs, data)
        rows.append((n, lo, hi))
    _write_csv(args.out, ["n", "fer_lower", "fer_upper"],
               ((n, repr(lo), repr(hi)) for n, lo, hi in rows))
    for label, idx in (("lower", 1), ("upper", 2)):
        gamma, beta = fit_error_exponent([(row[0], row[idx]) for row in rows])
        print(f"{label}: gamma={gamma:.6g} beta={beta:.6g}")
    print(f"-> {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    code = _load_code(args.code)
    ch = _channel_arg(args.channel)
    if args.trials < 1:
        raise BadArguments("--trials must be at least 1")
    if args.seed < 0:
        raise BadArguments("--seed must be non-negative")
    report = run_mc(code, ch, args.trials, seed=args.seed)
    Path(args.out).write_text(report.to_json(timing=False), encoding="utf-8")
    line = (f"fer={report.fer:.6g} ci=({report.fer_ci[0]:.6g},{report.fer_ci[1]:.6g}) "
            f"ber={report.ber:.6g} trials={report.trials} seed={report.seed} "
            f"wall={report.wall_time:.2f}s")
    if ch.kind == "awgn":
        ebn0 = 10.0 * math.log10(1.0 / (2.0 * code.rate * ch.param ** 2))
        line += f" sigma={ch.param:g} eb_n0={ebn0:.3f}dB"
    print(line + f" -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convpolar",
        description="Polar and convolutional polar codes: construction, "
                    "encoding, SC decoding, exact erasure analysis, Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a frozen-set code, save JSON spec")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", required=True, type=int, help="log2 of the block size")
    p.add_argument("--rate", required=True, help="data fraction, e.g. 1/2")
    p.add_argument("--channel", required=True, help="bec:0.5 | bsc:0.08 | awgn:1.0")
    p.add_argument("--boundary", default="periodic", choices=BOUNDARIES)
    p.add_argument("--method", default="erasure", choices=("erasure", "bitflip"))
    p.add_argument("--samples", default=128, type=int)
    p.add_argument("--seed", default=0, type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_construct)

    p = sub.add_parser("encode", help="encode data bits with a saved code")
    p.add_argument("--code", required=True)
    p.add_argument("--data", required=True, help="k bits, e.g. 0110")
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_encode)

    p = sub.add_parser("decode", help="SC-decode one received word")
    p.add_argument("--code", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--received", required=True,
                   help="comma-separated symbols; 'e' or '?' marks a BEC erasure")
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_decode)

    p = sub.add_parser("analyze-bec", help="exact per-position first-error CSV")
    p.add_argument("--code", required=True)
    p.add_argument("--eps", required=True, type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_analyze_bec)

    p = sub.add_parser("fit-exponent",
                       help="fer bounds over a range of n plus scaling-law fit")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--rate", required=True)
    p.add_argument("--eps", required=True, type=float)
    p.add_argument("--n-min", required=True, type=int)
    p.add_argument("--n-max", required=True, type=int)
    p.add_argument("--boundary", default="periodic", choices=BOUNDARIES)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_fit_exponent)

    p = sub.add_parser("simulate", help="Monte Carlo FER/BER, save JSON report")
    p.add_argument("--code", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--trials", required=True, type=int)
    p.add_argument("--seed", default=0, type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except BadArguments as exc:
        print(f"convpolar: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"convpolar: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
