"""Streaming BLER/BER/OP/throughput accumulation with normal-approximation confidence intervals."""

import math
from dataclasses import dataclass, replace
from typing import Optional

from simulation.errors import ConsistencyError, EmptyAccumulatorError
from simulation.relaying import ScenarioConfig, TrialOutcome

Z_95 = 1.96

COUNTERS = (
    "trials",
    "block_errors",
    "bit_errors",
    "bits_total",
    "outages",
    "primary_bits",
    "primary_bit_errors",
    "primary_block_errors",
    "primary_phase1_bit_errors",
    "secondary_bits",
    "secondary_bit_errors",
    "secondary_block_errors",
)


@dataclass
class MetricAccumulator:
    """Integer counters for one experiment point. Single owner, merged at the end."""

    config: ScenarioConfig
    channel_uses_per_trial: int
    bits_per_block: int
    trials: int = 0
    block_errors: int = 0
    bit_errors: int = 0
    bits_total: int = 0
    outages: int = 0
    primary_bits: int = 0
    primary_bit_errors: int = 0
    primary_block_errors: int = 0
    primary_phase1_bit_errors: int = 0
    secondary_bits: int = 0
    secondary_bit_errors: int = 0
    secondary_block_errors: int = 0

    @classmethod
    def empty(cls, config: ScenarioConfig) -> "MetricAccumulator":
        return cls(config, config.channel_uses, config.bits_per_block)

    def counters(self) -> dict:
        return {name: getattr(self, name) for name in COUNTERS}


@dataclass(frozen=True)
class MetricSummary:
    trials: int
    bler: float
    bler_ci95: float
    ber: float
    ber_ci95: float
    op: float
    op_ci95: float
    throughput: float
    primary_ber: Optional[float] = None
    secondary_ber: Optional[float] = None
    primary_ber_phase1: Optional[float] = None


def update(acc: MetricAccumulator, outcome: TrialOutcome) -> MetricAccumulator:
    """Add one trial to ``acc`` in place and return it.

    Raises:
        ConsistencyError: If the outcome spent a different number of channel uses
    """
    if outcome.channel_uses != acc.channel_uses_per_trial:
        raise ConsistencyError(
            f"Trial used {outcome.channel_uses} channel uses, accumulator expects "
            f"{acc.channel_uses_per_trial}"
        )

    acc.trials += 1
    acc.block_errors += int(outcome.block_error)
    acc.bit_errors += outcome.bit_errors
    acc.bits_total += outcome.bits_sent
    acc.outages += int(outcome.outage)
    acc.primary_bits += outcome.primary_bits
    acc.primary_bit_errors += outcome.primary_bit_errors
    acc.primary_block_errors += int(outcome.primary_block_error)
    acc.primary_phase1_bit_errors += outcome.primary_phase1_bit_errors
    acc.secondary_bits += outcome.secondary_bits
    acc.secondary_bit_errors += outcome.secondary_bit_errors
    acc.secondary_block_errors += int(outcome.secondary_block_error)
    return acc


def merge(a: MetricAccumulator, b: MetricAccumulator) -> MetricAccumulator:
    """Componentwise sum of two accumulators of the same experiment point.

    Raises:
        ConsistencyError: If the accumulators come from different configurations
    """
    if a.config != b.config or a.channel_uses_per_trial != b.channel_uses_per_trial \
            or a.bits_per_block != b.bits_per_block:
        raise ConsistencyError(f"Cannot merge results of {a.config} with {b.config}")

    return replace(a, **{name: getattr(a, name) + getattr(b, name) for name in COUNTERS})


def ci95(proportion: float, trials: int) -> float:
    """Normal-approximation 95% half-width."""
    return Z_95 * math.sqrt(proportion * (1 - proportion) / trials)


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def summarize(acc: MetricAccumulator) -> MetricSummary:
    """Turn counters into BLER, BER, OP and goodput throughput in bits per channel use.

    Raises:
        EmptyAccumulatorError: If no trial has been recorded
    """
    if acc.trials < 1:
        raise EmptyAccumulatorError("Cannot summarize an accumulator with zero trials")

    bler = acc.block_errors / acc.trials
    ber = acc.bit_errors / acc.bits_total
    op = acc.outages / acc.trials
    return MetricSummary(
        trials=acc.trials,
        bler=bler,
        bler_ci95=ci95(bler, acc.trials),
        ber=ber,
        ber_ci95=ci95(ber, acc.trials),
        op=op,
        op_ci95=ci95(op, acc.trials),
        throughput=acc.bits_per_block * (1 - bler) / acc.channel_uses_per_trial,
        primary_ber=_ratio(acc.primary_bit_errors, acc.primary_bits),
        secondary_ber=_ratio(acc.secondary_bit_errors, acc.secondary_bits),
        primary_ber_phase1=_ratio(acc.primary_phase1_bit_errors, acc.primary_bits),
    )
