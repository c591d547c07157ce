"""End-to-end trials for P2P, serial DF/AF chains, parallel relay selection and overlay CR."""

import functools
from dataclasses import dataclass, fields
from enum import Enum
from typing import Dict, List, Sequence

import numpy as np

from simulation.channel import HopChannel, NoiseModel, sample_hop, subcarrier_snr, transmit
from simulation.errors import ParameterError
from simulation.im_modem import (
    PskConstellation,
    SapTable,
    amplitude_per_active,
    bits_per_block,
    build_psk,
    build_sap_table,
    candidate_grid,
    check_noise_var,
    check_search_space,
    demap,
    int_to_bits,
    map_bits,
    ml_detect,
    whitened_metric,
)


class Structure(str, Enum):
    P2P = "p2p"
    SERIAL = "serial"
    PARALLEL = "parallel"
    CR_OVERLAY = "cr"


class Protocol(str, Enum):
    DF = "df"
    AF_VARIABLE = "af-vg"
    AF_FIXED = "af-fg"


class RsScheme(str, Enum):
    NONE = "none"
    PRS = "prs"
    BULK = "bulk"
    PER_SUBCARRIER = "ps"


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that defines one experiment point.

    ``hops`` is L and ``relays`` is T. ``pt`` is the per-group transmit power of
    every transmitting node, in linear units relative to the noise power scale.
    """

    structure: Structure = Structure.P2P
    protocol: Protocol = Protocol.DF
    rs_scheme: RsScheme = RsScheme.NONE
    hops: int = 1
    relays: int = 1
    n_subcarriers: int = 4
    n_active: int = 2
    psk_order: int = 2
    pt: float = 1.0
    alpha: float = 2.0
    d_sd: float = 10.0
    noise_var: float = 1.0
    outage_threshold: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "structure", Structure(self.structure))
            object.__setattr__(self, "protocol", Protocol(self.protocol))
            object.__setattr__(self, "rs_scheme", RsScheme(self.rs_scheme))
        except ValueError as e:
            raise ParameterError(f"Invalid scenario option: {e}") from e
        self._validate()

    def _validate(self) -> None:
        structure, protocol, scheme = self.structure, self.protocol, self.rs_scheme

        if self.relays < 1:
            raise ParameterError(f"Relay count T must be >= 1, got {self.relays}")
        if structure is Structure.P2P and self.hops != 1:
            raise ParameterError(f"p2p requires L = 1, got L = {self.hops}")
        if structure is Structure.SERIAL and self.hops < 2:
            raise ParameterError(f"serial requires L >= 2, got L = {self.hops}")
        if structure in (Structure.PARALLEL, Structure.CR_OVERLAY) and self.hops != 2:
            raise ParameterError(f"{structure.value} requires L = 2, got L = {self.hops}")
        if structure is Structure.CR_OVERLAY and self.relays != 1:
            raise ParameterError(f"cr requires T = 1, got T = {self.relays}")
        if scheme is not RsScheme.NONE and structure is not Structure.PARALLEL:
            raise ParameterError(f"Relay selection '{scheme.value}' requires the parallel structure")
        if protocol is not Protocol.DF and structure is not Structure.SERIAL:
            raise ParameterError(
                f"Protocol '{protocol.value}' is only supported with the serial structure"
            )

        for name in ("pt", "d_sd", "noise_var"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.alpha < 0 or self.outage_threshold < 0:
            raise ParameterError("alpha and outage_threshold must be non-negative")

        build_psk(self.psk_order)
        check_search_space(self.n_subcarriers, self.n_active, self.psk_order)
        table = build_sap_table(self.n_subcarriers, self.n_active)
        if structure is Structure.CR_OVERLAY and table.index_bits == 0:
            raise ParameterError("cr needs at least one index bit for the secondary stream (K < N)")

    @property
    def table(self) -> SapTable:
        return build_sap_table(self.n_subcarriers, self.n_active)

    @property
    def constellation(self) -> PskConstellation:
        return build_psk(self.psk_order)

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.noise_var)

    @property
    def bits_per_block(self) -> int:
        return bits_per_block(self.table, self.constellation)

    @property
    def channel_uses(self) -> int:
        """Subcarrier-slots spent per end-to-end transmission."""
        if self.structure in (Structure.PARALLEL, Structure.CR_OVERLAY):
            return 2 * self.n_subcarriers
        return self.hops * self.n_subcarriers

    def as_dict(self) -> Dict[str, object]:
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, value in values.items():
            if isinstance(value, Enum):
                values[key] = value.value
        return values


@dataclass(frozen=True)
class TrialOutcome:
    bits_sent: int
    bit_errors: int
    block_error: bool
    outage: bool
    channel_uses: int
    primary_bits: int = 0
    primary_bit_errors: int = 0
    primary_block_error: bool = False
    primary_phase1_bit_errors: int = 0
    secondary_bits: int = 0
    secondary_bit_errors: int = 0
    secondary_block_error: bool = False


def node_positions(config: ScenarioConfig) -> List[float]:
    """Per-hop distances: equal spacing d_SD/L, relays at the midpoint for dual-hop structures."""
    if config.structure in (Structure.PARALLEL, Structure.CR_OVERLAY):
        return [config.d_sd / 2, config.d_sd / 2]
    return [config.d_sd / config.hops] * config.hops


def draw_bits(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.integers(0, 2, size=count, dtype=np.int8)


def is_outage(e2e_snr: np.ndarray, active: Sequence[int], threshold: float) -> bool:
    """Block-level outage: the weakest transmitted active subcarrier falls below threshold."""
    return bool(np.min(e2e_snr[list(active)]) < threshold)


def _outcome(sent: np.ndarray, detected: np.ndarray, outage: bool,
             config: ScenarioConfig) -> TrialOutcome:
    errors = int(np.count_nonzero(sent != detected))
    return TrialOutcome(
        bits_sent=int(sent.size),
        bit_errors=errors,
        block_error=errors > 0,
        outage=outage,
        channel_uses=config.channel_uses,
    )


def _detect_bits(received: np.ndarray, gain: np.ndarray, noise_var, table: SapTable,
                 constellation: PskConstellation, pt: float) -> np.ndarray:
    sap_index, symbols = ml_detect(received, gain, noise_var, table, constellation, pt)
    return demap(sap_index, symbols, table, constellation)


def run_serial_df_trial(config: ScenarioConfig, rng: np.random.Generator) -> TrialOutcome:
    """One source-to-destination transmission over L decode-and-forward hops.

    Every intermediate relay re-maps whatever it detected, so a wrong decision
    propagates to the destination.
    """
    table, constellation, noise = config.table, config.constellation, config.noise
    hops = [sample_hop(rng, config.n_subcarriers, d, config.alpha) for d in node_positions(config)]
    bits = draw_bits(rng, config.bits_per_block)
    block = map_bits(bits, table, constellation, config.pt)

    forwarded = block
    for index, hop in enumerate(hops):
        received = transmit(forwarded.amplitudes, hop, noise, rng)
        detected = _detect_bits(received, hop.gains, noise.variance, table, constellation, config.pt)
        if index < len(hops) - 1:
            forwarded = map_bits(detected, table, constellation, config.pt)

    power = config.pt / config.n_active
    e2e_snr = np.min([subcarrier_snr(hop, power, noise) for hop in hops], axis=0)
    outage = is_outage(e2e_snr, table.patterns[block.sap_index], config.outage_threshold)
    return _outcome(bits, detected, outage, config)


def af_end_to_end_snr(hop_snrs: Sequence[np.ndarray]) -> np.ndarray:
    """Exact variable-gain cascade: fold g*s / (g + s + 1) over the hops."""
    e2e = np.asarray(hop_snrs[0], dtype=float)
    for snr in hop_snrs[1:]:
        e2e = e2e * snr / (e2e + snr + 1)
    return e2e


def run_serial_af_trial(config: ScenarioConfig, rng: np.random.Generator) -> TrialOutcome:
    """One transmission over L amplify-and-forward hops.

    Relays cannot see the SAP, so they amplify every subcarrier and spend
    Pt/N on each. The destination detects against the cascade gain and the
    accumulated, subcarrier-dependent noise variance.
    """
    if config.structure is not Structure.SERIAL or config.protocol is Protocol.DF:
        raise ParameterError("AF trials require the serial structure with an af protocol")

    table, constellation, noise = config.table, config.constellation, config.noise
    hops = [sample_hop(rng, config.n_subcarriers, d, config.alpha) for d in node_positions(config)]
    bits = draw_bits(rng, config.bits_per_block)
    block = map_bits(bits, table, constellation, config.pt)

    source_power = config.pt / config.n_active
    relay_power = config.pt / config.n_subcarriers

    received = transmit(block.amplitudes, hops[0], noise, rng)
    cascade = hops[0].gains.copy()
    accumulated = np.full(config.n_subcarriers, noise.variance)
    hop_snrs = [subcarrier_snr(hops[0], source_power, noise)]

    for k in range(1, len(hops)):
        if config.protocol is Protocol.AF_VARIABLE:
            mean_power = source_power * np.abs(cascade) ** 2 + accumulated
        else:
            incoming = source_power if k == 1 else relay_power
            mean_power = np.full(config.n_subcarriers,
                                 incoming * hops[k - 1].path_loss + noise.variance)
        gain = np.sqrt(relay_power / mean_power)

        received = transmit(gain * received, hops[k], noise, rng)
        stage = hops[k].gains * gain
        cascade = stage * cascade
        accumulated = np.abs(stage) ** 2 * accumulated + noise.variance
        hop_snrs.append(subcarrier_snr(hops[k], relay_power, noise))

    detected = _detect_bits(received, cascade, accumulated, table, constellation, config.pt)
    e2e_snr = af_end_to_end_snr(hop_snrs)
    outage = is_outage(e2e_snr, table.patterns[block.sap_index], config.outage_threshold)
    return _outcome(bits, detected, outage, config)


def _check_gain_matrix(e2e_gains) -> np.ndarray:
    e2e_gains = np.asarray(e2e_gains, dtype=float)
    if e2e_gains.ndim != 2 or e2e_gains.shape[0] < 1:
        raise ParameterError(f"Expected a T x N gain matrix with T >= 1, got shape {e2e_gains.shape}")
    return e2e_gains


def end_to_end_gains(first_hop: Sequence[HopChannel], second_hop: Sequence[HopChannel]) -> np.ndarray:
    """T x N matrix of min(|g1_t[n]|^2, |g2_t[n]|^2)."""
    return np.minimum(
        np.stack([hop.power_gains for hop in first_hop]),
        np.stack([hop.power_gains for hop in second_hop]),
    )


def select_relay_prs(first_hop_channels: Sequence[HopChannel]) -> int:
    """Partial relay selection: best worst-subcarrier power on the first hop only."""
    if not first_hop_channels:
        raise ParameterError("PRS needs at least one relay")
    worst = [float(np.min(hop.power_gains)) for hop in first_hop_channels]
    return int(np.argmax(worst))


def select_relay_bulk(e2e_gains) -> int:
    """One relay for all subcarriers, chosen by the worst end-to-end subcarrier gain."""
    return int(np.argmax(_check_gain_matrix(e2e_gains).min(axis=1)))


def select_relays_ps(e2e_gains) -> np.ndarray:
    """Per-subcarrier selection: the best end-to-end relay for each subcarrier."""
    return np.argmax(_check_gain_matrix(e2e_gains), axis=0)


def route_subcarriers(scheme: RsScheme, first_hop: Sequence[HopChannel],
                      second_hop: Sequence[HopChannel]) -> np.ndarray:
    """Relay index serving each subcarrier under the given selection scheme."""
    n_subcarriers = first_hop[0].gains.size
    if scheme is RsScheme.PER_SUBCARRIER:
        return select_relays_ps(end_to_end_gains(first_hop, second_hop))
    if scheme is RsScheme.BULK:
        relay = select_relay_bulk(end_to_end_gains(first_hop, second_hop))
    elif scheme is RsScheme.PRS:
        relay = select_relay_prs(first_hop)
    else:
        relay = 0
    return np.full(n_subcarriers, relay, dtype=np.intp)


def run_parallel_trial(config: ScenarioConfig, rng: np.random.Generator) -> TrialOutcome:
    """Dual-hop DF with T parallel relays and the configured relay selection."""
    if config.structure is not Structure.PARALLEL:
        raise ParameterError("Parallel trials require the parallel structure")

    table, constellation, noise = config.table, config.constellation, config.noise
    first_distance, second_distance = node_positions(config)
    first_hop = [sample_hop(rng, config.n_subcarriers, first_distance, config.alpha)
                 for _ in range(config.relays)]
    second_hop = [sample_hop(rng, config.n_subcarriers, second_distance, config.alpha)
                  for _ in range(config.relays)]
    bits = draw_bits(rng, config.bits_per_block)
    block = map_bits(bits, table, constellation, config.pt)

    relay_observations = [transmit(block.amplitudes, hop, noise, rng) for hop in first_hop]
    route = route_subcarriers(config.rs_scheme, first_hop, second_hop)

    forwarded = np.zeros((config.relays, config.n_subcarriers), dtype=complex)
    for relay in np.unique(route):
        relay_bits = _detect_bits(relay_observations[relay], first_hop[relay].gains,
                                  noise.variance, table, constellation, config.pt)
        forwarded[relay] = map_bits(relay_bits, table, constellation, config.pt).amplitudes

    subcarriers = np.arange(config.n_subcarriers)
    composite = HopChannel(np.stack([hop.gains for hop in second_hop])[route, subcarriers],
                           second_distance, config.alpha)
    received = transmit(forwarded[route, subcarriers], composite, noise, rng)
    detected = _detect_bits(received, composite.gains, noise.variance, table, constellation, config.pt)

    power = config.pt / config.n_active
    first_snr = np.stack([subcarrier_snr(hop, power, noise) for hop in first_hop])
    second_snr = np.stack([subcarrier_snr(hop, power, noise) for hop in second_hop])
    e2e_snr = np.minimum(first_snr[route, subcarriers], second_snr[route, subcarriers])
    outage = is_outage(e2e_snr, table.patterns[block.sap_index], config.outage_threshold)
    return _outcome(bits, detected, outage, config)


def primary_table(table: SapTable) -> SapTable:
    """Single-pattern table for the primary transmitter: the first K subcarriers."""
    return SapTable(table.n_subcarriers, table.n_active, 0, table.patterns[:1])


@functools.lru_cache(maxsize=16)
def _two_phase_candidates(table: SapTable, constellation: PskConstellation) -> np.ndarray:
    """Unit-amplitude candidates over both phases, in the order of ``candidate_grid``."""
    grid = candidate_grid(table, constellation)
    phase1 = np.zeros_like(grid.unit_amplitudes)
    phase1[:, :table.n_active] = constellation.by_label[grid.labels]
    return np.hstack([phase1, grid.unit_amplitudes])


def detect_primary_two_phase(phase1_received: np.ndarray, phase1_gain: np.ndarray,
                             phase2_received: np.ndarray, phase2_gain: np.ndarray,
                             noise_var, table: SapTable, constellation: PskConstellation,
                             pt: float) -> np.ndarray:
    """Primary receiver: joint ML over both phases, SAP estimate discarded.

    Returns:
        Label of each of the K primary symbols
    """
    n = table.n_subcarriers
    noise_var = check_noise_var(noise_var, n)
    received = np.concatenate([phase1_received, phase2_received])
    gain = np.concatenate([phase1_gain, phase2_gain])
    candidates = amplitude_per_active(table, pt) * _two_phase_candidates(table, constellation)

    metric = whitened_metric(received, gain, np.concatenate([noise_var, noise_var]), candidates)
    return candidate_grid(table, constellation).labels[int(np.argmin(metric))]


def _labels_to_bits(labels: Sequence[int], constellation: PskConstellation) -> np.ndarray:
    width = constellation.bits_per_symbol
    return np.concatenate([int_to_bits(int(label), width) for label in labels])


def run_cr_overlay_trial(config: ScenarioConfig, rng: np.random.Generator) -> TrialOutcome:
    """Two-phase overlay cognitive radio.

    Phase 1: PT sends K primary symbols on the first K subcarriers to PR and ST.
    Phase 2: ST re-sends its decoded primary symbols on the SAP chosen by fresh
    secondary bits; PR combines both phases, SR only recovers the SAP.
    """
    if config.structure is not Structure.CR_OVERLAY:
        raise ParameterError("CR trials require the cr structure")

    table, constellation, noise = config.table, config.constellation, config.noise
    pt_table = primary_table(table)
    to_relay, to_receivers = node_positions(config)
    n = config.n_subcarriers

    direct = sample_hop(rng, n, config.d_sd, config.alpha)
    pt_to_st = sample_hop(rng, n, to_relay, config.alpha)
    st_to_pr = sample_hop(rng, n, to_receivers, config.alpha)
    st_to_sr = sample_hop(rng, n, to_receivers, config.alpha)

    primary_bits = draw_bits(rng, config.n_active * constellation.bits_per_symbol)
    secondary_bits = draw_bits(rng, table.index_bits)
    phase1 = map_bits(primary_bits, pt_table, constellation, config.pt)

    pr_phase1 = transmit(phase1.amplitudes, direct, noise, rng)
    st_received = transmit(phase1.amplitudes, pt_to_st, noise, rng)
    st_primary = _detect_bits(st_received, pt_to_st.gains, noise.variance,
                              pt_table, constellation, config.pt)

    phase2 = map_bits(np.concatenate([secondary_bits, st_primary]), table, constellation, config.pt)
    pr_phase2 = transmit(phase2.amplitudes, st_to_pr, noise, rng)
    sr_received = transmit(phase2.amplitudes, st_to_sr, noise, rng)

    joint_labels = detect_primary_two_phase(pr_phase1, direct.gains, pr_phase2, st_to_pr.gains,
                                            noise.variance, table, constellation, config.pt)
    primary_detected = _labels_to_bits(joint_labels, constellation)
    phase1_only = _detect_bits(pr_phase1, direct.gains, noise.variance,
                               pt_table, constellation, config.pt)
    sr_sap, _ = ml_detect(sr_received, st_to_sr.gains, noise.variance, table, constellation, config.pt)
    secondary_detected = int_to_bits(sr_sap, table.index_bits)

    primary_errors = int(np.count_nonzero(primary_bits != primary_detected))
    secondary_errors = int(np.count_nonzero(secondary_bits != secondary_detected))

    power = config.pt / config.n_active
    direct_snr = subcarrier_snr(direct, power, noise)[:config.n_active]
    relay_in_snr = subcarrier_snr(pt_to_st, power, noise)[:config.n_active]
    relay_out_snr = subcarrier_snr(st_to_pr, power, noise)[list(table.patterns[phase2.sap_index])]
    per_symbol = np.maximum(direct_snr, np.minimum(relay_in_snr, relay_out_snr))

    return TrialOutcome(
        bits_sent=int(primary_bits.size + secondary_bits.size),
        bit_errors=primary_errors + secondary_errors,
        block_error=primary_errors + secondary_errors > 0,
        outage=bool(np.min(per_symbol) < config.outage_threshold),
        channel_uses=config.channel_uses,
        primary_bits=int(primary_bits.size),
        primary_bit_errors=primary_errors,
        primary_block_error=primary_errors > 0,
        primary_phase1_bit_errors=int(np.count_nonzero(primary_bits != phase1_only)),
        secondary_bits=int(secondary_bits.size),
        secondary_bit_errors=secondary_errors,
        secondary_block_error=secondary_errors > 0,
    )


def run_trial(config: ScenarioConfig, rng: np.random.Generator) -> TrialOutcome:
    """Dispatch one trial to the runner for the configured structure and protocol."""
    if config.structure is Structure.PARALLEL:
        return run_parallel_trial(config, rng)
    if config.structure is Structure.CR_OVERLAY:
        return run_cr_overlay_trial(config, rng)
    if config.protocol is Protocol.DF:
        return run_serial_df_trial(config, rng)
    return run_serial_af_trial(config, rng)
