"""
CLI Module
Command-line subcommands for data generation, stage reruns and the full run
"""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from typing import Optional, Sequence

from . import __version__
from .config import RunConfig, load_config
from .data import SynthConfig, generate_dataset, manifest_summary
from .errors import EXIT_OK, EXIT_PIPELINE, SepsisError
from .pipeline import run_pipeline, run_stage

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"
STAGE_COMMANDS = ("cohort", "features", "train", "evaluate", "explain", "ttest-report")


def setup_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stdout, force=True)


def _add_run_options(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML configuration file")
    parser.add_argument("--data", dest="data_dir", help="directory holding the input tables")
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--models", help="comma separated subset of rf,gb,lr,svm,knn")
    parser.add_argument("--ttest-variant", dest="ttest_variant", choices=("student", "welch"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepsis-mortality",
                                     description="Sepsis in-hospital mortality prediction pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging and tracebacks")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only, no progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic dataset with known ground truth")
    defaults = SynthConfig()
    synth.add_argument("--out", required=True, help="target data directory")
    synth.add_argument("--n-patients", type=int, default=defaults.n_patients)
    synth.add_argument("--seed", type=int, default=defaults.seed)
    synth.add_argument("--signal", type=float, default=defaults.signal_strength, help="class mean shift in sd units")
    synth.add_argument("--informative", type=int, default=defaults.n_informative_items)
    synth.add_argument("--noise", type=int, default=defaults.n_noise_items)
    synth.add_argument("--sepsis-fraction", type=float, default=defaults.sepsis_fraction)
    synth.add_argument("--mortality-rate", type=float, default=defaults.mortality_rate)
    synth.add_argument("--missing-rate", type=float, default=defaults.missing_rate)
    synth.add_argument("--nonlinear", action="store_true", help="random-sign class shifts per patient and item")

    run = sub.add_parser("run", help="full pipeline from the input tables to the reports")
    _add_run_options(run)
    for name in STAGE_COMMANDS:
        stage = sub.add_parser(name, help=f"rerun the {name} stage from the files in --out")
        _add_run_options(stage)
        if name == "ttest-report":
            stage.add_argument("--summary", help="CSV of per-feature summary statistics to test instead")
    return parser


class PipelineCLI:
    """Dispatches parsed arguments to the generator and the pipeline"""

    def __init__(self, args: argparse.Namespace):
        self.args = args

    def config(self) -> RunConfig:
        a = self.args
        overrides = {
            "data_dir": a.data_dir,
            "out_dir": a.out_dir,
            "seed": a.seed,
            "models": a.models,
            "ttest_variant": a.ttest_variant,
        }
        if a.quiet:
            overrides["progress"] = False
        return load_config(a.config, overrides)

    def synth_command(self) -> int:
        a = self.args
        cfg = SynthConfig(
            n_patients=a.n_patients,
            seed=a.seed,
            signal_strength=a.signal,
            n_informative_items=a.informative,
            n_noise_items=a.noise,
            sepsis_fraction=a.sepsis_fraction,
            mortality_rate=a.mortality_rate,
            missing_rate=a.missing_rate,
            nonlinear=a.nonlinear,
        )
        summary = manifest_summary(generate_dataset(cfg, a.out))
        logger.info("synth: %d patients, %d sepsis patients, %d deaths among them",
                    summary.n_patients, summary.n_sepsis_patients, summary.n_sepsis_deaths)
        return EXIT_OK

    def run_command(self) -> int:
        cfg = self.config()
        report = run_pipeline(cfg)
        for kind, ev in report.models.items():
            print(f"{kind}: AUROC {ev.auroc:.4f} [{ev.auroc_ci[0]:.4f}, {ev.auroc_ci[1]:.4f}]")
        return EXIT_OK

    def stage_command(self) -> int:
        cfg = self.config()
        if self.args.command in ("cohort", "features"):
            cfg.validate(check_paths=True)
        run_stage(self.args.command, cfg, getattr(self.args, "summary", None))
        return EXIT_OK

    def run(self) -> int:
        if self.args.command == "synth":
            return self.synth_command()
        if self.args.command == "run":
            return self.run_command()
        return self.stage_command()


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and map failures to exit codes 2 / 3 / 4"""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    try:
        return PipelineCLI(args).run()
    except SepsisError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return e.exit_code
    except Exception as e:
        print(f"[ERROR] {type(e).__name__}: {e}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return EXIT_PIPELINE
