"""OFDM-IM modem: look-up table SAP mapping, Gray-coded M-PSK and joint ML detection."""

import functools
import itertools
import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np
from scipy.special import comb

from simulation.errors import ParameterError

logger = logging.getLogger(__name__)

MAX_SUBCARRIERS = 32
# Exhaustive search beyond this many candidates does not fit in memory.
MAX_CANDIDATES = 1 << 20
MEMBERSHIP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SapTable:
    """Legitimate subcarrier activation patterns for one group of N subcarriers."""

    n_subcarriers: int
    n_active: int
    index_bits: int
    patterns: Tuple[Tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.patterns)

    @functools.cached_property
    def positions(self) -> np.ndarray:
        """Active positions as an integer array of shape (2^p1, K)."""
        return np.array(self.patterns, dtype=np.intp).reshape(len(self.patterns), self.n_active)


@dataclass(frozen=True)
class PskConstellation:
    """Unit-energy M-PSK with reflected Gray labels, phase order counter-clockwise from 0."""

    order: int
    points: Tuple[complex, ...]
    labels: Tuple[int, ...]

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    @functools.cached_property
    def by_label(self) -> np.ndarray:
        """Points re-indexed so that ``by_label[label]`` is the point carrying ``label``."""
        table = np.empty(self.order, dtype=complex)
        table[list(self.labels)] = self.points
        return table

    def labels_of(self, symbols: Sequence[complex]) -> np.ndarray:
        """Return the label of every symbol.

        Raises:
            ParameterError: If a symbol is not a constellation point
        """
        symbols = np.asarray(symbols, dtype=complex).ravel()
        distances = np.abs(symbols[:, None] - self.by_label[None, :])
        labels = np.argmin(distances, axis=1)
        if symbols.size and np.max(distances[np.arange(symbols.size), labels]) > MEMBERSHIP_TOLERANCE:
            raise ParameterError(f"Symbols {symbols} are not all {self.order}-PSK points")
        return labels


@dataclass(frozen=True, eq=False)
class ImBlock:
    """One frequency-domain OFDM-IM group as put on the air."""

    sap_index: int
    symbols: Tuple[complex, ...]
    amplitudes: np.ndarray


class CandidateGrid(NamedTuple):
    """Every (SAP, symbol tuple) hypothesis, ordered by SAP index then label tuple."""

    sap_indices: np.ndarray
    labels: np.ndarray
    unit_amplitudes: np.ndarray


def sap_index_bits(n_subcarriers: int, n_active: int) -> int:
    """p1 = floor(log2(C(N, K))), computed without enumerating any subset.

    Raises:
        ParameterError: If 1 <= K <= N <= 32 does not hold
    """
    if not 1 <= n_active <= n_subcarriers <= MAX_SUBCARRIERS:
        raise ParameterError(
            f"Invalid OFDM-IM group: need 1 <= K <= N <= {MAX_SUBCARRIERS}, "
            f"got N={n_subcarriers}, K={n_active}"
        )
    return int(comb(n_subcarriers, n_active, exact=True)).bit_length() - 1


def check_search_space(n_subcarriers: int, n_active: int, psk_order: int) -> int:
    """Return the ML candidate count 2^p1 * M^K.

    Raises:
        ParameterError: If the count exceeds MAX_CANDIDATES
    """
    total = (1 << sap_index_bits(n_subcarriers, n_active)) * psk_order ** n_active
    if total > MAX_CANDIDATES:
        raise ParameterError(
            f"Exhaustive ML search over {total} candidates is not supported "
            f"(limit {MAX_CANDIDATES}); reduce N, K or M"
        )
    return total


@functools.lru_cache(maxsize=64)
def build_sap_table(n_subcarriers: int, n_active: int) -> SapTable:
    """Build the look-up table of the first 2^p1 K-subsets in lexicographic order.

    Args:
        n_subcarriers: Group size N
        n_active: Number of active subcarriers K

    Returns:
        SapTable with p1 = floor(log2(C(N, K)))

    Raises:
        ParameterError: If 1 <= K <= N <= 32 does not hold
    """
    index_bits = sap_index_bits(n_subcarriers, n_active)
    patterns = tuple(
        itertools.islice(itertools.combinations(range(n_subcarriers), n_active), 1 << index_bits)
    )
    logger.debug(f"SAP table N={n_subcarriers} K={n_active}: p1={index_bits}")
    return SapTable(n_subcarriers, n_active, index_bits, patterns)


@functools.lru_cache(maxsize=16)
def build_psk(order: int) -> PskConstellation:
    """Build Gray-labelled M-PSK.

    Raises:
        ParameterError: If order is not a power of two >= 2
    """
    if order < 2 or order & (order - 1):
        raise ParameterError(f"PSK order must be a power of two >= 2, got {order}")

    phases = 2 * np.pi * np.arange(order) / order
    points = tuple(complex(p) for p in np.exp(1j * phases))
    labels = tuple(k ^ (k >> 1) for k in range(order))
    return PskConstellation(order, points, labels)


def bits_per_block(table: SapTable, constellation: PskConstellation) -> int:
    """Bits carried by one group: p = p1 + K*log2(M)."""
    return table.index_bits + table.n_active * constellation.bits_per_symbol


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Big-endian bit vector of ``value``."""
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.int8)


def bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for bit in bits:
        value = (value << 1) | int(bit)
    return value


def amplitude_per_active(table: SapTable, pt: float) -> float:
    """Amplitude of each active subcarrier when Pt is split over the K active ones."""
    if pt <= 0:
        raise ParameterError(f"Transmit power must be positive, got {pt}")
    return float(np.sqrt(pt / table.n_active))


def map_bits(bits: Sequence[int], table: SapTable, constellation: PskConstellation,
             pt: float) -> ImBlock:
    """Map p1 index bits and K*log2(M) symbol bits onto one OFDM-IM group.

    Args:
        bits: Bit vector, index bits first (big-endian), then symbol bits in
            ascending active-position order
        table: SAP look-up table
        constellation: Gray-labelled PSK
        pt: Transmit power of the group

    Returns:
        ImBlock with power pt/K on each active subcarrier

    Raises:
        ParameterError: On a bit-vector length mismatch or non-positive power
    """
    bits = np.asarray(bits, dtype=np.int8).ravel()
    expected = bits_per_block(table, constellation)
    if bits.size != expected:
        raise ParameterError(f"Expected {expected} bits per block, got {bits.size}")

    width = constellation.bits_per_symbol
    sap_index = bits_to_int(bits[:table.index_bits])
    labels = [bits_to_int(chunk) for chunk in bits[table.index_bits:].reshape(table.n_active, width)]
    symbols = constellation.by_label[labels]

    amplitudes = np.zeros(table.n_subcarriers, dtype=complex)
    amplitudes[list(table.patterns[sap_index])] = amplitude_per_active(table, pt) * symbols
    return ImBlock(sap_index, tuple(complex(s) for s in symbols), amplitudes)


def demap(sap_index: int, symbols: Sequence[complex], table: SapTable,
          constellation: PskConstellation) -> np.ndarray:
    """Inverse of :func:`map_bits`.

    Raises:
        ParameterError: If the SAP index is out of range or the symbols do not
            form K constellation points
    """
    if not 0 <= sap_index < len(table):
        raise ParameterError(f"SAP index {sap_index} outside [0, {len(table)})")
    symbols = np.asarray(symbols, dtype=complex).ravel()
    if symbols.size != table.n_active:
        raise ParameterError(f"Expected {table.n_active} symbols, got {symbols.size}")

    width = constellation.bits_per_symbol
    parts = [int_to_bits(sap_index, table.index_bits)]
    parts.extend(int_to_bits(int(label), width) for label in constellation.labels_of(symbols))
    return np.concatenate(parts)


@functools.lru_cache(maxsize=64)
def candidate_grid(table: SapTable, constellation: PskConstellation) -> CandidateGrid:
    """Enumerate the 2^p1 * M^K unit-amplitude hypotheses searched by the ML detector.

    Raises:
        ParameterError: If the search space exceeds MAX_CANDIDATES
    """
    per_pattern = constellation.order ** table.n_active
    total = len(table) * per_pattern
    if total > MAX_CANDIDATES:
        raise ParameterError(
            f"Exhaustive ML search over {total} candidates is not supported "
            f"(limit {MAX_CANDIDATES}); reduce N, K or M"
        )

    label_tuples = np.array(
        list(itertools.product(range(constellation.order), repeat=table.n_active)),
        dtype=np.intp,
    ).reshape(per_pattern, table.n_active)
    sap_indices = np.repeat(np.arange(len(table)), per_pattern)
    labels = np.tile(label_tuples, (len(table), 1))
    positions = np.repeat(table.positions, per_pattern, axis=0)

    unit_amplitudes = np.zeros((total, table.n_subcarriers), dtype=complex)
    unit_amplitudes[np.arange(total)[:, None], positions] = constellation.by_label[labels]
    return CandidateGrid(sap_indices, labels, unit_amplitudes)


def whitened_metric(received: np.ndarray, gain: np.ndarray, noise_var: np.ndarray,
                    candidates: np.ndarray) -> np.ndarray:
    """Sum over subcarriers of |y - g*x|^2 / noise_var for every candidate row."""
    residual = received[None, :] - gain[None, :] * candidates
    return np.sum((residual.real ** 2 + residual.imag ** 2) / noise_var[None, :], axis=1)


def check_noise_var(noise_var, n_subcarriers: int) -> np.ndarray:
    """Broadcast a noise variance to one value per subcarrier and validate it."""
    noise_var = np.broadcast_to(np.asarray(noise_var, dtype=float), (n_subcarriers,))
    if np.any(noise_var <= 0):
        raise ParameterError(f"Noise variance must be strictly positive, got {noise_var}")
    return noise_var


def ml_detect(received: np.ndarray, effective_gain: np.ndarray, noise_var,
              table: SapTable, constellation: PskConstellation,
              pt: float) -> Tuple[int, Tuple[complex, ...]]:
    """Joint ML detection of the SAP and the K symbols of one group.

    Ties resolve to the lowest SAP index, then the lexicographically smallest
    label tuple, because candidates are enumerated in that order.

    Args:
        received: Length-N observation
        effective_gain: Length-N end-to-end channel seen by the group
        noise_var: Per-subcarrier noise variance (scalar broadcasts)
        table: SAP look-up table
        constellation: Gray-labelled PSK
        pt: Transmit power the group was mapped with

    Returns:
        Tuple of (sap_index, unit-magnitude symbols)

    Raises:
        ParameterError: If any noise variance is not strictly positive
    """
    received = np.asarray(received, dtype=complex)
    effective_gain = np.asarray(effective_gain, dtype=complex)
    noise_var = check_noise_var(noise_var, table.n_subcarriers)

    grid = candidate_grid(table, constellation)
    metric = whitened_metric(received, effective_gain, noise_var,
                             amplitude_per_active(table, pt) * grid.unit_amplitudes)
    best = int(np.argmin(metric))
    symbols = constellation.by_label[grid.labels[best]]
    return int(grid.sap_indices[best]), tuple(complex(s) for s in symbols)
