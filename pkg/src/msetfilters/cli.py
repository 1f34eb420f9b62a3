"""Command-line entry point: build filters, query them, evaluate the
closed-form error predictions, and run the experiment suites.

Exit codes: 0 success, 1 usage error, 2 data error, 3 tolerance
violation in an experiment run.  All randomness derives from --seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analytics, codec, experiments, workload
from .common import OutcomeTally
from .shifting import MODE_CIRCULAR, MODE_WORD, ShiftingFilter
from .spatial import SpatialFilter

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TOLERANCE = 3

EXPERIMENT_NAMES = ("word-sweep", "fpp-sweep", "fpp-curves", "interset", "cost")

ANALYZE_FORMULAS = (
    "bf-fpp", "shbf-fpp", "shbf-fpp-specific", "shbf-isep",
    "shbf-isep-cardinality", "sbf-fpp", "sbf-fpp-specific",
    "sbf-isep-specific", "sbf-isep", "entropy", "cost",
)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _add_size_arg(parser: argparse.ArgumentParser, name: str, help_text: str) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument(f"--{name}", type=int, help=help_text)
    group.add_argument(f"--{name}-exp", type=int, help=f"{help_text}, as a power of two exponent")


def _resolve_size(args: argparse.Namespace, name: str, required: bool = True) -> int | None:
    plain = getattr(args, name)
    exp = getattr(args, f"{name}_exp")
    if plain is not None:
        return plain
    if exp is not None:
        return 2 ** exp
    if required:
        raise UsageError(f"--{name} or --{name}-exp is required")
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a filter from a dataset file and store its image")
    p_build.add_argument("--kind", choices=("shbf", "sbf"), required=True)
    _add_size_arg(p_build, "m", "cell count")
    p_build.add_argument("--k", type=int, required=True, help="index hash count")
    p_build.add_argument("--s", type=int, help="set count (default: highest label in the dataset)")
    _add_size_arg(p_build, "w", "offset bound (shbf word-bounded mode)")
    p_build.add_argument("--seed", type=int, default=7)
    p_build.add_argument("--dataset", required=True, help="hex<TAB>label lines")
    p_build.add_argument("--out", required=True, help="output image path")

    p_query = sub.add_parser("query", help="query a stored filter image")
    p_query.add_argument("--image", required=True)
    src = p_query.add_mutually_exclusive_group(required=True)
    src.add_argument("--element", help="hex-encoded element")
    src.add_argument("--elements-file", help="file with one hex element per line")
    p_query.add_argument("--summary", action="store_true",
                         help="suppress per-element verdicts, print only the summary")

    p_analyze = sub.add_parser("analyze", help="evaluate a closed-form prediction")
    p_analyze.add_argument("formula", choices=ANALYZE_FORMULAS)
    _add_size_arg(p_analyze, "m", "cell count")
    p_analyze.add_argument("--k", type=int)
    p_analyze.add_argument("--n", type=int)
    p_analyze.add_argument("--s", type=int)
    p_analyze.add_argument("--i", type=int, help="set label / candidate cardinality")
    p_analyze.add_argument("--counts", help="per-set sizes: 'uniform:SxP' or comma list")
    p_analyze.add_argument("--filter", choices=("shbf", "sbf"), help="cost model target")
    p_analyze.add_argument("--c", type=int, help="entropy: correct count")
    p_analyze.add_argument("--e", type=int, default=0, help="entropy: wrong-single-set count")
    p_analyze.add_argument("--u", help="entropy: comma list of u_2,u_3,... counts")

    p_exp = sub.add_parser("experiment", help="run a named experiment suite to CSV")
    p_exp.add_argument("name", choices=EXPERIMENT_NAMES)
    p_exp.add_argument("--seed", type=int, default=7)
    p_exp.add_argument("--out", required=True, help="output directory")
    p_exp.add_argument("--k", type=int, default=10)
    p_exp.add_argument("--sets", type=int, default=255, help="set count of the generated datasets")
    p_exp.add_argument("--per-set", type=int, default=256, help="elements per set (uniform dataset)")
    p_exp.add_argument("--queries", type=int, default=500000,
                       help="non-member probe count (fpp-sweep)")
    p_exp.add_argument("--m-exps", help="comma list of cell-count exponents to sweep")
    p_exp.add_argument("--timings", action="store_true",
                       help="include wall-time in the CSV (breaks byte-identical reruns)")
    return parser


# -- build -------------------------------------------------------------

def _cmd_build(args: argparse.Namespace) -> int:
    m = _resolve_size(args, "m")
    w = _resolve_size(args, "w", required=False)
    if w is not None and args.kind != "shbf":
        raise UsageError("--w applies only to shbf word-bounded mode")
    try:
        dataset = workload.read_dataset(args.dataset)
    except OSError as exc:
        raise DataError(f"cannot read dataset: {exc}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None
    s = args.s if args.s is not None else max(dataset.s, 1)
    if dataset.s > s:
        raise DataError(f"dataset contains label {dataset.s} > s={s}")
    if args.kind == "shbf":
        filt: ShiftingFilter | SpatialFilter = ShiftingFilter(
            m, args.k, s,
            mode=MODE_WORD if w is not None else MODE_CIRCULAR,
            w=w, seed=args.seed,
        )
    else:
        filt = SpatialFilter(m, args.k, s, seed=args.seed)
    filt.insert_many(dataset.elements(), dataset.labels())
    filt.seal()
    try:
        codec.write_image(args.out, filt)
    except OSError as exc:
        raise DataError(f"cannot write image: {exc}") from None
    image_bytes = len(codec.encode(filt))
    print(f"kind={args.kind} m={m} k={args.k} s={s} seed={args.seed}")
    print(f"inserted={dataset.n} fill={filt.fill_ratio:.6f} image_bytes={image_bytes}")
    return EXIT_OK


# -- query -------------------------------------------------------------

def _format_verdict(filt, element: bytes) -> tuple[str, bool]:
    """Human verdict plus whether the element matched anything."""
    if isinstance(filt, ShiftingFilter):
        candidates = filt.query(element)
        if candidates.is_empty:
            return "none", False
        return ",".join(str(label) for label in candidates), True
    verdict = filt.query(element)
    return str(verdict), verdict != 0


def _cmd_query(args: argparse.Namespace) -> int:
    try:
        filt = codec.read_image(args.image)
    except OSError as exc:
        raise DataError(f"cannot read image: {exc}") from None
    except codec.CodecError as exc:
        raise DataError(f"bad image: {exc}") from None
    if args.element is not None:
        try:
            element = bytes.fromhex(args.element)
        except ValueError:
            raise DataError(f"element is not valid hex: {args.element!r}") from None
        verdict, _ = _format_verdict(filt, element)
        print(verdict)
        return EXIT_OK
    try:
        probes = workload.read_elements(args.elements_file)
    except OSError as exc:
        raise DataError(f"cannot read elements file: {exc}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None
    positive = 0
    if isinstance(filt, ShiftingFilter):
        results = filt.query_many(probes)
        for candidates in results:
            if candidates:
                positive += 1
            if not args.summary:
                print(",".join(str(label) for label in candidates) if candidates else "none")
    else:
        verdicts = filt.query_many(probes)
        positive = int((verdicts != 0).sum())
        if not args.summary:
            for verdict in verdicts:
                print(int(verdict))
    fraction = positive / len(probes) if probes else 0.0
    print(f"# queried={len(probes)} positive={positive} fraction={fraction:.10g}")
    return EXIT_OK


# -- analyze -----------------------------------------------------------

def _parse_counts(text: str) -> list[int]:
    if text.startswith("uniform:"):
        shape = text[len("uniform:"):]
        try:
            s_str, per_str = shape.split("x")
            return [int(per_str)] * int(s_str)
        except ValueError:
            raise UsageError("expected --counts uniform:<sets>x<per-set>") from None
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise UsageError("expected --counts as comma-separated integers") from None


def _require(args: argparse.Namespace, *names: str) -> list:
    values = []
    for name in names:
        if name == "m":
            values.append(_resolve_size(args, "m"))
            continue
        value = getattr(args, name)
        if value is None:
            raise UsageError(f"--{name} is required for this formula")
        values.append(value)
    return values


def _cmd_analyze(args: argparse.Namespace) -> int:
    formula = args.formula
    if formula == "cost":
        kind, k, s = _require(args, "filter", "k", "s")
        model = analytics.cost_model(kind, k, s)
        print(f"lookups/query: {model.lookups_per_query}")
        print(f"hashes/query: {model.hashes_per_query}")
        print(f"cells-read/query min: {model.cells_read_min}")
        print(f"cells-read/query max: {model.cells_read_max}")
        return EXIT_OK
    if formula == "entropy":
        if args.c is None:
            raise UsageError("--c is required for entropy")
        u: dict[int, int] = {}
        if args.u:
            for idx, part in enumerate(args.u.split(",")):
                try:
                    u[idx + 2] = int(part)
                except ValueError:
                    raise UsageError("--u must be comma-separated integers") from None
        tally = OutcomeTally(c=args.c, e=args.e, u=u)
        print(f"{analytics.entropy(tally):.10g}")
        return EXIT_OK

    if formula in ("bf-fpp", "shbf-fpp-specific"):
        m, k, n = _require(args, "m", "k", "n")
        value = analytics.bf_fpp(m, k, n)
    elif formula == "sbf-fpp":
        m, k, n = _require(args, "m", "k", "n")
        value = analytics.bf_fpp(m, k, n)
    elif formula == "shbf-fpp":
        m, k, n, s = _require(args, "m", "k", "n", "s")
        value = analytics.shbf_fpp_overall(m, k, n, s)
    elif formula == "shbf-isep":
        m, k, n, s = _require(args, "m", "k", "n", "s")
        value = analytics.shbf_isep(m, k, n, s)
    elif formula == "shbf-isep-cardinality":
        m, k, n, s, i = _require(args, "m", "k", "n", "s", "i")
        value = analytics.shbf_isep_cardinality(m, k, n, s, i)
    elif formula == "sbf-fpp-specific":
        m, k, counts_spec, i = _require(args, "m", "k", "counts", "i")
        value = analytics.sbf_fpp_specific(m, k, _parse_counts(counts_spec), i)
    elif formula == "sbf-isep-specific":
        m, k, counts_spec, i = _require(args, "m", "k", "counts", "i")
        value = analytics.sbf_isep_specific(m, k, _parse_counts(counts_spec), i)
    elif formula == "sbf-isep":
        m, k, counts_spec = _require(args, "m", "k", "counts")
        value = analytics.sbf_isep_overall(m, k, _parse_counts(counts_spec))
    else:  # pragma: no cover - choices are closed above
        raise UsageError(f"unknown formula {formula}")
    print(f"{value:.10g}")
    return EXIT_OK


# -- experiment ----------------------------------------------------------

def _canonical_inputs(args: argparse.Namespace):
    uniform = workload.gen_uniform(args.sets, args.per_set, args.seed)
    rand = workload.gen_random(args.sets, args.sets * args.per_set, args.seed + 1)
    return uniform, rand


def _cmd_experiment(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory: {exc}") from None
    k = args.k
    seed = args.seed
    name = args.name

    if name == "interset":
        uniform, rand = _canonical_inputs(args)
        reports = experiments.run_interset_experiment(
            uniform, k, seed + 3, experiment="interset-uniform")
        reports += experiments.run_interset_experiment(
            rand, k, seed + 3, experiment="interset-random")
    elif name == "word-sweep":
        uniform, _ = _canonical_inputs(args)
        reports = experiments.run_word_size_sweep(uniform, k, seed + 3)
    elif name == "fpp-sweep":
        uniform, _ = _canonical_inputs(args)
        non = workload.gen_non_elements(args.queries, seed + 2, uniform)
        m_values = (
            [2 ** int(x) for x in args.m_exps.split(",")]
            if args.m_exps else experiments.DEFAULT_SWEEP_M
        )
        reports = experiments.run_fpp_sweep(
            uniform, non, k, seed + 3, m_values=m_values)
    elif name == "fpp-curves":
        uniform, _ = _canonical_inputs(args)
        reports = experiments.run_fpp_curves(k, uniform.n)
    elif name == "cost":
        reports = experiments.run_cost_experiment(seed=seed)
    else:  # pragma: no cover
        raise UsageError(f"unknown experiment {name}")

    out_path = out_dir / f"{name}.csv"
    try:
        experiments.write_csv(reports, out_path, include_timings=args.timings)
    except OSError as exc:
        raise DataError(f"cannot write CSV: {exc}") from None

    flagged = [r for r in reports if r.flags]
    print(f"{name}: {len(reports)} reports -> {out_path}")
    for report in flagged:
        for flag in report.flags:
            print(f"TOLERANCE {report.filter_kind} m={report.m} w={report.w}: {flag}")
    return EXIT_TOLERANCE if flagged else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "build":
            return _cmd_build(args)
        if args.command == "query":
            return _cmd_query(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        return _cmd_experiment(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
