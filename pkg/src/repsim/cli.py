"""Command-line front end.

Exit codes: 0 success, 1 I/O, format or shape errors, 2 degenerate input,
64 usage errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .activation_io import load_activation_set, read_matrix, write_activation_set
from .demo import StageFailed, run_demo
from .errors import ConfigError, DegenerateInput, FormatError, ManifestError, ShapeMismatch
from .experiments import SUITES, ExperimentConfig, Lab, accuracy_row, write_accuracy_csv
from .heatmap import HeatmapStyle, write_heatmap_svg
from .metrics import SimilarityMatrix, center_columns, format_score, get_metric, pairwise_similarity
from .simnet import VARIANTS

EXIT_FAILURE = 1
EXIT_DEGENERATE = 2
EXIT_USAGE = 64

METRIC_CHOICES = ("rv", "rv2", "cka")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(suppress: bool) -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0), help="base seed for simulation")
    p.add_argument("--center", action="store_true", default=d(False),
                   help="column-center activations before rv/rv2")
    p.add_argument("--metric", choices=METRIC_CHOICES, default=d("rv2"))
    p.add_argument("--jobs", type=int, default=d(1), help="worker threads for pairwise cells")
    p.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"), default=d((0.0, 1.0)),
                   dest="value_range", help="heatmap color range")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="repsim", description=__doc__.splitlines()[0],
                     parents=[_common(False)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common(True)

    p = sub.add_parser("metric", parents=[common], help="score one pair of RSAM matrices")
    p.add_argument("file_x")
    p.add_argument("file_y")

    p = sub.add_parser("compare", parents=[common], help="layer-by-layer similarity of two activation sets")
    p.add_argument("manifest_a")
    p.add_argument("manifest_b")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg")

    p = sub.add_parser("simulate", parents=[common], help="train one network and record its activations")
    p.add_argument("--recipe", choices=VARIANTS, default="standard")
    p.add_argument("--n", type=int, help="number of random layers for random_above")
    p.add_argument("--task", choices=("a", "b"), default="a")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("demo", parents=[common], help="run a suite end to end")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("render", parents=[common], help="render a similarity CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    return parser


def _style(args, title=None):
    return HeatmapStyle(value_range=tuple(args.value_range), title=title)


def cmd_metric(args):
    x = read_matrix(args.file_x, Path(args.file_x).stem)
    y = read_matrix(args.file_y, Path(args.file_y).stem)
    if args.center and args.metric != "cka":
        x, y = center_columns(x), center_columns(y)
    print(format_score(get_metric(args.metric)(x, y)))


def cmd_compare(args):
    a = load_activation_set(args.manifest_a)
    b = load_activation_set(args.manifest_b)
    sim = pairwise_similarity(a, b, args.metric, center=args.center, jobs=args.jobs)
    sim.write_csv(args.out_csv)
    if args.out_svg:
        write_heatmap_svg(args.out_svg, sim, _style(args))
    if sim.n_degenerate:
        print(f"warning: {sim.n_degenerate} undefined cell(s) written as nan", file=sys.stderr)


def cmd_simulate(args):
    lab = Lab(ExperimentConfig(seed=args.seed))
    if args.recipe == "standard":
        net = lab.standard(args.task)
    elif args.recipe == "untrained":
        net = lab.untrained()
    elif args.recipe == "random_above":
        if args.n is None:
            raise ConfigError("--recipe random_above needs --n")
        net = lab.random_above(args.n)
    elif args.recipe == "transfer_freeze":
        net = lab.transfer_freeze()
    else:
        net = lab.freeze(args.task)
    out = Path(args.out)
    write_activation_set(out / net.name, lab.activations(net))
    write_accuracy_csv(out / "accuracy.csv", [accuracy_row(net)])
    print(f"{net.name}: top1 {net.top1:.4f}")


def cmd_demo(args):
    run_demo(args.suite, args.out, config=ExperimentConfig(seed=args.seed), metric=args.metric,
             center=args.center, jobs=args.jobs, value_range=tuple(args.value_range))
    print(f"wrote {Path(args.out) / 'report.md'}")


def cmd_render(args):
    sim = SimilarityMatrix.read_csv(args.csv)
    write_heatmap_svg(args.out, sim, _style(args, Path(args.csv).stem))


COMMANDS = {"metric": cmd_metric, "compare": cmd_compare, "simulate": cmd_simulate,
            "demo": cmd_demo, "render": cmd_render}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    if args.value_range[0] >= args.value_range[1]:
        parser.error("--range needs LO < HI")
    try:
        COMMANDS[args.command](args)
    except DegenerateInput as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError, ManifestError, ShapeMismatch, ValueError, StageFailed) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
