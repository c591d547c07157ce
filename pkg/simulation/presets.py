"""Named scenarios of the relay-assisted OFDM-IM case study.

Values are written as config-file strings so they merge with flags and config
files through the same conversion path.
"""

from typing import Dict

from simulation.errors import UsageError

PRESETS: Dict[str, Dict[str, str]] = {
    "p2p": {"structure": "p2p", "hops": "1"},
    "plain-ofdm": {"structure": "p2p", "hops": "1", "active": "4"},
    "df-2hop": {"structure": "serial", "protocol": "df", "hops": "2"},
    "df-3hop": {"structure": "serial", "protocol": "df", "hops": "3"},
    "af-vg-2hop": {"structure": "serial", "protocol": "af-vg", "hops": "2"},
    "af-fg-2hop": {"structure": "serial", "protocol": "af-fg", "hops": "2"},
    "parallel-single": {"structure": "parallel", "hops": "2", "relays": "1", "rs": "none"},
    "parallel-prs": {"structure": "parallel", "hops": "2", "relays": "2", "rs": "prs"},
    "parallel-bulk": {"structure": "parallel", "hops": "2", "relays": "2", "rs": "bulk"},
    "parallel-ps": {"structure": "parallel", "hops": "2", "relays": "2", "rs": "ps"},
    "cr-overlay": {"structure": "cr", "hops": "2", "relays": "1"},
}


def preset_settings(name: str) -> Dict[str, str]:
    """Settings of preset ``name``.

    Raises:
        UsageError: If the preset does not exist
    """
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise UsageError(
            f"Unknown preset '{name}'. Available: {', '.join(sorted(PRESETS))}"
        ) from None
