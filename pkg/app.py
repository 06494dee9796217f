import argparse
import logging
import sys
import time
import traceback

from experiments import create_experiment, list_experiments
from spde.errors import ConfigurationError, GuardError
from utils.config import load_config
from utils.report_generator import ReportGenerator

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spde-lab",
        description="Verification experiments for forward and backward parabolic Ito equations on a noise tree",
    )
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    subcommands = parser.add_subparsers(dest="command", required=True)
    run = subcommands.add_parser("run", help="run the experiment a config file names")
    run.add_argument("config", help="path to an INI run configuration")
    subcommands.add_parser("list", help="list the experiments with their default options")
    return parser


def run_experiment(path):
    """Load a config, run its experiment and write the report files"""
    try:
        config = load_config(path)
    except (ConfigurationError, GuardError) as e:
        logger.error(f"Rejected configuration {path}: {str(e)}")
        return EXIT_CONFIG

    try:
        experiment = create_experiment(config)
        logger.info(f"Starting {config.experiment} (seed {config.seed})")
        started = time.perf_counter()
        report = experiment.run()
        report.runtime = time.perf_counter() - started

        generator = ReportGenerator(report, config.output_dir, detailed=config.detailed_report)
        result = generator.generate()
        print(result["summary"])
    except (ConfigurationError, GuardError) as e:
        logger.error(f"Rejected configuration {path}: {str(e)}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"An error occurred while running {path}: {str(e)}")
        logger.debug(traceback.format_exc())
        return EXIT_FAILED

    counts = report.counts()
    logger.info(f"Finished {config.experiment} in {report.runtime:.2f}s: {counts}")
    if not report.passed:
        for record in report.failures():
            logger.error(f"Check failed: {record.category} / {record.check} = {record.value:.6g} ({record.threshold})")
        return EXIT_FAILED
    return EXIT_PASSED


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    if args.command == "list":
        print(list_experiments())
        return EXIT_PASSED
    return run_experiment(args.config)


if __name__ == "__main__":
    sys.exit(main())
