"""Command-line driver.

Subcommands mirror the pipeline stages; each reads the previous stage's
archive and writes its own::

    sleeptda simulate   --output studies/
    sleeptda preprocess --output run/matrices   studies/*/manifest.json
    sleeptda persist    --output run/diagrams   run/matrices
    sleeptda landscape  --output run/landscapes run/diagrams
    sleeptda test       --output run/           run/landscapes
    sleeptda plot       --output fig.svg --key syn-apnea-000:0:Delta run/diagrams

Exit codes: 0 success, 2 usage error, 3 validation error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, cohort, pipeline, plotting
from .config import PipelineConfig
from .errors import ArchiveError, ValidationError

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("sleeptda")


class UsageError(Exception):
    pass


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default,
                        help="pipeline configuration file")
    parser.add_argument("--seed", type=int, metavar="N", default=default,
                        help="override the configured random seed")
    parser.add_argument("--jobs", type=int, metavar="N", default=argparse.SUPPRESS if suppress else 1,
                        help="worker threads (results do not depend on it)")
    parser.add_argument("--output", metavar="DIR", default=default, help="output location")


def build_parser():
    parser = argparse.ArgumentParser(prog="sleeptda", description=__doc__.split("\n")[0],
                                     fromfile_prefix_chars="@")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, help):
        p = sub.add_parser(name, help=help, fromfile_prefix_chars="@")
        _global_flags(p, suppress=True)
        return p

    p = add("simulate", "write a synthetic two-group cohort of studies")
    p.add_argument("--n-per-group", type=int, default=20)
    p.add_argument("--channels", type=int, default=7)
    p.add_argument("--sample-rate", type=int, default=256)
    p.add_argument("--duration", type=float, default=300.0, help="seconds per study")
    p.add_argument("--coupling-apnea", type=float, default=0.8)
    p.add_argument("--coupling-control", type=float, default=0.2)
    p.add_argument("--noise-level", type=float, default=1.0)
    p.add_argument("--mains", type=float, default=0.0, help="amplitude of added 60 Hz interference")
    p.add_argument("--format", choices=cohort.SIGNAL_FORMATS, default="f32le")

    p = add("preprocess", "study manifests -> band distance-matrix archive")
    p.add_argument("manifests", nargs="*", help="study manifest files (or @listfile)")

    p = add("persist", "distance-matrix archive -> persistence-diagram archive")
    p.add_argument("archive")

    p = add("landscape", "diagram archive -> landscape archive")
    p.add_argument("archive")

    p = add("test", "landscape archive -> band x stage p-value table")
    p.add_argument("archive")
    p.add_argument("-B", "--permutations", type=int, help="override the configured B")

    p = add("plot", "render one diagram or landscape record as SVG")
    p.add_argument("archive")
    p.add_argument("--key", required=True, help="record key study_id:epoch:band")
    p.add_argument("--title")

    p = add("config", "print the effective configuration")
    return parser


def _config(args):
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _need_output(args):
    if not args.output:
        raise UsageError(f"{args.command}: --output is required")
    return Path(args.output)


def cmd_simulate(args, cfg):
    out = _need_output(args)
    sc = cohort.SyntheticCohortConfig(
        n_studies_per_group=args.n_per_group, channels=args.channels, sample_rate=args.sample_rate,
        duration_s=args.duration, coupling_apnea=args.coupling_apnea,
        coupling_control=args.coupling_control, noise_level=args.noise_level, seed=cfg.seed,
        mains_amplitude=args.mains)
    paths = []
    for study in cohort.generate_synthetic_cohort(sc):
        paths.append(cohort.write_study(study, out / study.study_id, signal_format=args.format))
    (out / "manifests.txt").write_text("".join(f"{p}\n" for p in paths))
    print(f"wrote {len(paths)} studies to {out} (list in {out / 'manifests.txt'})")


def cmd_preprocess(args, cfg):
    if not args.manifests:
        raise UsageError("preprocess: at least one manifest is required")
    out = _need_output(args)
    studies = []
    for m in args.manifests:
        try:
            studies.append(cohort.load_study(m))
        except ValidationError as exc:
            raise ValidationError(f"{m}: {exc}") from exc
        except OSError as exc:
            raise OSError(f"{m}: {exc}") from exc
    archive, counts = pipeline.preprocess(studies, out, cfg, jobs=args.jobs)
    if not len(archive):
        print("warning: no distance matrices written (only excluded or unlabeled epochs)",
              file=sys.stderr)
    print(f"{len(archive)} matrices from {len(studies)} studies")
    for (stage, band), n in sorted(counts.items()):
        print(f"  {stage:6s} {band:6s} {n}")


def cmd_persist(args, cfg):
    dst = pipeline.persist(args.archive, _need_output(args), jobs=args.jobs)
    print(f"{len(dst)} diagrams written to {dst.root}")


def cmd_landscape(args, cfg):
    dst = pipeline.build_landscapes(args.archive, _need_output(args), cfg, jobs=args.jobs)
    print(f"{len(dst)} landscapes written to {dst.root}")


def cmd_test(args, cfg):
    if args.permutations is not None:
        cfg = cfg.replace(permutations=args.permutations)
    table = pipeline.permutation_table(args.archive, cfg, jobs=args.jobs)
    text = table.to_text()
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ptable.csv").write_text(text)
        (out / "ptable_details.tsv").write_text(table.details_text())
    print(text, end="")


def cmd_plot(args, cfg):
    out = _need_output(args)
    archive = pipeline.Archive.open(args.archive)
    if archive.kind == "matrices":
        raise ValidationError("plot needs a diagram or landscape archive")
    try:
        entry = archive.find(args.key)
    except KeyError as exc:
        raise ArchiveError(args.key, f"lookup failed: {exc.args[0]}") from None
    record = archive.load(entry)
    title = args.title or f"{entry.key.band} {entry.key.stage} {entry.key.study_id} epoch {entry.key.epoch_index}"
    if archive.kind == "diagrams":
        svg = plotting.diagram_svg(record, title)
    else:
        svg = plotting.landscape_svg(record, title)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    print(f"wrote {out}")


def cmd_config(args, cfg):
    text = cfg.to_text()
    if args.output:
        Path(args.output).write_text(text)
    print(text, end="")


COMMANDS = {
    "simulate": cmd_simulate,
    "preprocess": cmd_preprocess,
    "persist": cmd_persist,
    "landscape": cmd_landscape,
    "test": cmd_test,
    "plot": cmd_plot,
    "config": cmd_config,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArchiveError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
