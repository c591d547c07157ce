"""Command-line parsing, config files and CSV output."""

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from dotenv import dotenv_values

from simulation import __version__
from simulation.errors import UsageError
from simulation.harness import SweepResult, SweepSpec
from simulation.presets import PRESETS, preset_settings
from simulation.relaying import Protocol, RsScheme, ScenarioConfig, Structure

logger = logging.getLogger(__name__)

TOOL_NAME = "relay-ofdm-im"

# Case-study defaults; hops falls back to 1 for p2p and 2 otherwise.
DEFAULTS: Dict[str, str] = {
    "structure": "p2p",
    "protocol": "df",
    "rs": "none",
    "relays": "1",
    "subcarriers": "4",
    "active": "2",
    "psk": "2",
    "dsd": "10",
    "alpha": "2",
    "noise-var": "1",
    "threshold": "1",
    "pt-db": "0:40:5",
    "trials": "100000",
    "seed": "1",
    "workers": "1",
}
SETTING_KEYS = frozenset(DEFAULTS) | {"hops", "out", "preset"}
# Written into every CSV for provenance, ignored when a CSV is read back.
INFORMATIONAL_KEYS = frozenset({"tool", "timestamp"})

COLUMNS = [
    "structure", "protocol", "rs_scheme", "L", "T", "N", "K", "M", "pt_db", "trials",
    "bler", "bler_ci95", "ber", "ber_ci95", "op", "op_ci95", "throughput_bpcu", "seed",
]
CR_COLUMNS = ["primary_ber", "secondary_ber", "primary_ber_phase1"]


@dataclass(frozen=True)
class RunManifest:
    """Fully resolved run: everything needed to reproduce a CSV."""

    spec: SweepSpec
    output: Optional[str] = None
    workers: int = 1
    tool_version: str = f"{TOOL_NAME} {__version__}"
    timestamp: str = ""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="main.py",
        description="Monte Carlo BLER/BER/outage/throughput sweeps for relay-assisted OFDM-IM",
    )
    parser.add_argument("--structure", choices=[s.value for s in Structure])
    parser.add_argument("--protocol", choices=[p.value for p in Protocol])
    parser.add_argument("--rs", choices=[r.value for r in RsScheme], help="Relay selection scheme")
    parser.add_argument("--hops", "--L", dest="hops", metavar="L")
    parser.add_argument("--relays", "--T", dest="relays", metavar="T")
    parser.add_argument("--subcarriers", "--N", dest="subcarriers", metavar="N")
    parser.add_argument("--active", "--K", dest="active", metavar="K")
    parser.add_argument("--psk", "--M", dest="psk", metavar="M")
    parser.add_argument("--dsd", metavar="METERS", help="Source-destination distance")
    parser.add_argument("--alpha", metavar="A", help="Path-loss exponent")
    parser.add_argument("--noise-var", dest="noise_var", metavar="SIGMA2")
    parser.add_argument("--threshold", metavar="GAMMA", help="Outage SNR threshold (linear)")
    parser.add_argument("--pt-db", dest="pt_db", metavar="START:STOP:STEP",
                        help="Transmit power grid in dB, or a comma-separated list")
    parser.add_argument("--trials", metavar="COUNT", help="Trials per grid point")
    parser.add_argument("--seed", metavar="U64")
    parser.add_argument("--workers", metavar="COUNT")
    parser.add_argument("--out", metavar="PATH", help="CSV output path (default: stdout)")
    parser.add_argument("--config", metavar="PATH",
                        help="key = value config file, or a CSV produced by an earlier run")
    parser.add_argument("--preset", metavar="NAME", help=f"One of: {', '.join(sorted(PRESETS))}")
    return parser


def _normalize(values: Dict[str, Optional[str]], source: str) -> Dict[str, str]:
    settings = {}
    for raw_key, value in values.items():
        key = raw_key.strip().lower().replace("_", "-")
        if key in INFORMATIONAL_KEYS:
            logger.debug(f"Ignoring informational key '{key}' from {source}")
            continue
        if key not in SETTING_KEYS:
            raise UsageError(f"Unknown key '{raw_key}' in {source}")
        if value is None or not value.strip():
            raise UsageError(f"Key '{raw_key}' in {source} has no value")
        settings[key] = value.strip()
    return settings


def manifest_from_csv(source) -> Dict[str, str]:
    """Recover run settings from the ``# key = value`` block of a results CSV.

    Args:
        source: Path or open text stream
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as f:
            lines = f.readlines()
    else:
        lines = source.readlines()

    block = "\n".join(line[1:].strip() for line in lines if line.startswith("#"))
    return _normalize(dotenv_values(stream=io.StringIO(block), interpolate=False), "CSV manifest")


def load_config_file(path: str) -> Dict[str, str]:
    """Read a flat ``key = value`` config file (or a results CSV).

    Raises:
        UsageError: If the file is missing or holds unknown keys
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise UsageError(f"Config file not found: {path}")
    if config_path.suffix.lower() == ".csv":
        return manifest_from_csv(config_path)
    return _normalize(dotenv_values(config_path, interpolate=False), str(config_path))


def parse_grid(text: str) -> Tuple[float, ...]:
    """Parse ``START:STOP:STEP`` (stop inclusive) or ``a,b,c`` into a strictly ascending grid.

    Raises:
        UsageError: If the grid is malformed
    """
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError("expected START:STOP:STEP")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError("need STEP > 0 and STOP >= START")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            grid = tuple(round(start + i * step, 10) for i in range(count))
        else:
            grid = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as e:
        raise UsageError(f"Malformed transmit power grid '{text}': {e}") from e

    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError(f"Transmit power grid '{text}' must be non-empty and strictly ascending")
    return grid


def _resolve(settings: Dict[str, str]) -> Tuple[SweepSpec, int]:
    try:
        structure = settings["structure"]
        hops = settings.get("hops") or ("1" if structure == Structure.P2P.value else "2")
        config = ScenarioConfig(
            structure=structure,
            protocol=settings["protocol"],
            rs_scheme=settings["rs"],
            hops=int(hops),
            relays=int(settings["relays"]),
            n_subcarriers=int(settings["subcarriers"]),
            n_active=int(settings["active"]),
            psk_order=int(settings["psk"]),
            alpha=float(settings["alpha"]),
            d_sd=float(settings["dsd"]),
            noise_var=float(settings["noise-var"]),
            outage_threshold=float(settings["threshold"]),
        )
        spec = SweepSpec(config, parse_grid(settings["pt-db"]), int(settings["trials"]),
                         int(settings["seed"]))
        workers = int(settings["workers"])
    except ValueError as e:
        raise UsageError(f"Invalid configuration: {e}") from e

    if workers < 1:
        raise UsageError(f"--workers must be >= 1, got {workers}")
    return spec, workers


def parse_args(argv: Optional[Sequence[str]] = None) -> RunManifest:
    """Resolve flags, config file, preset and defaults into a RunManifest.

    Precedence, highest first: flags, config file, preset, defaults.

    Raises:
        UsageError: On unknown flags, bad values or invalid scenario combinations
    """
    args = build_parser().parse_args(argv)

    flags = {
        key.replace("_", "-"): value
        for key, value in vars(args).items()
        if value is not None and key != "config"
    }
    from_file = load_config_file(args.config) if args.config else {}

    preset = flags.get("preset") or from_file.get("preset")
    settings = dict(DEFAULTS)
    if preset:
        settings.update(preset_settings(preset))
    settings.update(from_file)
    settings.update(flags)

    spec, workers = _resolve(settings)
    return RunManifest(
        spec=spec,
        output=settings.get("out"),
        workers=workers,
        timestamp=datetime.now().isoformat(timespec="seconds"),
    )


def manifest_settings(manifest: RunManifest) -> List[Tuple[str, str]]:
    """Every resolved parameter as config-file key/value pairs."""
    config = manifest.spec.config
    return [
        ("tool", manifest.tool_version),
        ("timestamp", manifest.timestamp),
        ("structure", config.structure.value),
        ("protocol", config.protocol.value),
        ("rs", config.rs_scheme.value),
        ("hops", str(config.hops)),
        ("relays", str(config.relays)),
        ("subcarriers", str(config.n_subcarriers)),
        ("active", str(config.n_active)),
        ("psk", str(config.psk_order)),
        ("dsd", repr(config.d_sd)),
        ("alpha", repr(config.alpha)),
        ("noise-var", repr(config.noise_var)),
        ("threshold", repr(config.outage_threshold)),
        ("pt-db", ",".join(repr(pt) for pt in manifest.spec.pt_grid_db)),
        ("trials", str(manifest.spec.trials_per_point)),
        ("seed", str(manifest.spec.master_seed)),
    ]


def _proportion(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6g}"


def emit_csv(result: SweepResult, manifest: RunManifest, sink: TextIO) -> None:
    """Write the manifest as ``#`` comments, a header row and one row per grid point."""
    for key, value in manifest_settings(manifest):
        sink.write(f"# {key} = {value}\n")

    config = result.spec.config
    cr = config.structure is Structure.CR_OVERLAY
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(COLUMNS + CR_COLUMNS if cr else COLUMNS)

    for pt_db, summary in zip(result.pt_grid_db, result.summaries):
        row = [
            config.structure.value, config.protocol.value, config.rs_scheme.value,
            config.hops, config.relays, config.n_subcarriers, config.n_active, config.psk_order,
            f"{pt_db:g}", summary.trials,
            _proportion(summary.bler), _proportion(summary.bler_ci95),
            _proportion(summary.ber), _proportion(summary.ber_ci95),
            _proportion(summary.op), _proportion(summary.op_ci95),
            _proportion(summary.throughput), result.spec.master_seed,
        ]
        if cr:
            row += [_proportion(summary.primary_ber), _proportion(summary.secondary_ber),
                    _proportion(summary.primary_ber_phase1)]
        writer.writerow(row)


def write_results(result: SweepResult, manifest: RunManifest) -> None:
    """Emit the CSV to ``manifest.output``, or stdout when no path is set.

    Raises:
        OSError: If the sink cannot be written
    """
    if manifest.output is None:
        emit_csv(result, manifest, sys.stdout)
        sys.stdout.flush()
        return

    with open(manifest.output, "w", encoding="utf-8", newline="") as sink:
        emit_csv(result, manifest, sink)
    logger.info(f"Results written to {manifest.output}")
