#!/usr/bin/env python3
"""
Relay-Assisted OFDM-IM Link-Level Simulator

Sweeps transmit power for P2P, serial DF/AF, parallel relay selection and
overlay cognitive-radio scenarios, and writes BLER, BER, outage probability
and throughput as a self-describing CSV.

Usage:
    python main.py                                          # P2P baseline, 0-40 dB
    python main.py --structure parallel --rs ps --T 4       # per-subcarrier selection
    python main.py --preset af-vg-2hop --out af.csv         # named case-study scenario
    python main.py --config previous_run.csv                # reproduce an earlier CSV
"""

import os
import sys
import logging
from datetime import datetime
from typing import Optional, Sequence

from dotenv import load_dotenv

from simulation.cli import parse_args, write_results
from simulation.errors import SimulationError, UsageError
from simulation.harness import SweepRunner

DEFAULT_LOG_FILE = 'relay_ofdm_im.log'


def setup_logging(log_level: str = 'INFO', log_file: Optional[str] = DEFAULT_LOG_FILE) -> None:
    """Configure logging for the application.

    Console output goes to stderr so that CSV on stdout stays clean.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Log file path; empty or None disables the file handler
    """
    log_format = (
        '%(asctime)s - %(levelname)s - %(name)s - %(message)s'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level.upper(), logging.INFO))

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    formatter = logging.Formatter(log_format)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point.

    Returns:
        Exit code (0=success, 2=usage error, 3=runtime/config error, 4=I/O error)
    """
    load_dotenv()

    try:
        setup_logging(os.getenv('LOG_LEVEL', 'INFO'), os.getenv('LOG_FILE', DEFAULT_LOG_FILE))
        logger = logging.getLogger(__name__)

        manifest = parse_args(argv)

        logger.info("=" * 80)
        logger.info("Relay-Assisted OFDM-IM Link-Level Simulator")
        logger.info("=" * 80)
        logger.info(f"Started at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

        result = SweepRunner(manifest.workers).run(manifest.spec)
        write_results(result, manifest)

        logger.info(f"Finished at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
        return 0

    except UsageError as e:
        print(f"\n❌ Usage error: {e}\n", file=sys.stderr)
        return 2

    except SimulationError as e:
        logging.getLogger(__name__).error(f"Simulation failed: {e}")
        print(f"\n❌ Simulation error: {e}\n", file=sys.stderr)
        return 3

    except OSError as e:
        print(f"\n❌ I/O error: {e}\n", file=sys.stderr)
        return 4

    except KeyboardInterrupt:
        print("\n\n⚠ Interrupted by user\n", file=sys.stderr)
        return 130

    except Exception as e:
        if not logging.getLogger().hasHandlers():
            logging.basicConfig(level=logging.ERROR)

        logging.exception(f"Unexpected error: {e}")
        print(f"\n❌ Unexpected error: {e}\n", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
