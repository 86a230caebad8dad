"""Named delay tables and channel profiles used by the experiments."""

from __future__ import annotations

from .channel import ChannelProfile, PROFILE_CROSSOVERS
from .errors import UnknownPreset
from .topology import DelayTable

# 3-link delay profiles
_VSD3 = ((0, 1, 1), (1, 0, 1), (1, 2, 0))
_SD = ((0, 1, 3), (2, 0, 4), (1, 2, 0))
_MD = ((0, 7, 11), (8, 0, 9), (12, 6, 0))
_LD = ((0, 20, 15), (24, 0, 17), (12, 28, 0))
_VLD = ((0, 78, 36), (59, 0, 88), (45, 92, 0))

# 10-link small/medium delay profiles; n-link variants take the top-left
# n x n corner
_VSD10 = (
    (0, 1, 1, 1, 1, 1, 1, 1, 1, 1),
    (1, 0, 1, 1, 1, 1, 1, 1, 1, 1),
    (1, 2, 0, 1, 1, 1, 1, 1, 2, 1),
    (2, 1, 1, 0, 1, 1, 1, 2, 1, 1),
    (1, 1, 1, 1, 0, 1, 2, 1, 1, 2),
    (1, 2, 1, 1, 1, 0, 1, 1, 1, 1),
    (1, 1, 1, 1, 1, 1, 0, 2, 1, 1),
    (1, 2, 1, 1, 2, 1, 1, 0, 2, 1),
    (2, 1, 1, 1, 1, 1, 1, 2, 0, 1),
    (1, 1, 2, 1, 1, 1, 2, 1, 1, 0),
)
_MD10 = (
    (0, 7, 11, 6, 5, 3, 9, 7, 11, 4),
    (8, 0, 9, 7, 3, 2, 5, 9, 2, 8),
    (12, 6, 0, 11, 3, 4, 11, 7, 2, 9),
    (9, 11, 2, 0, 5, 7, 2, 1, 10, 5),
    (2, 5, 11, 3, 0, 7, 8, 9, 10, 4),
    (1, 9, 2, 4, 8, 0, 11, 6, 5, 2),
    (12, 1, 3, 5, 9, 11, 0, 7, 9, 1),
    (7, 7, 1, 2, 11, 8, 4, 0, 11, 8),
    (4, 1, 4, 4, 9, 12, 11, 7, 0, 1),
    (1, 1, 12, 4, 7, 1, 1, 9, 12, 0),
)

# 4-link profiles from the near-optimality comparison
_DP = {
    "DP1": ((0, 1, 1, 1), (1, 0, 1, 1), (1, 1, 0, 1), (1, 1, 1, 0)),
    "DP2": ((0, 1, 1, 2), (2, 0, 2, 2), (2, 2, 0, 1), (2, 2, 2, 0)),
    "DP3": ((0, 1, 1, 2), (2, 0, 2, 2), (2, 2, 0, 1), (2, 1, 1, 0)),
    "DP4": ((0, 2, 2, 3), (1, 0, 2, 2), (2, 2, 0, 2), (1, 2, 1, 0)),
    "DP5": ((0, 2, 2, 2), (1, 0, 2, 2), (2, 3, 0, 3), (1, 2, 1, 0)),
    "DP6": ((0, 4, 4, 4), (4, 0, 4, 4), (4, 4, 0, 4), (4, 4, 4, 0)),
}

# worked-example tables: the 3-link instance with tau_max = 4, the 4-link
# elimination walkthrough, and the parametric 2-link delay split
_TABLE1 = ((0, 1, 3), (2, 0, 4), (1, 2, 0))
_TABLE4 = ((0, 4, 1, 1), (1, 0, 1, 2), (1, 1, 0, 5), (3, 1, 1, 0))

DELAY_PRESETS = {
    "VSD3": _VSD3,
    "SD": _SD,
    "MD": _MD,
    "LD": _LD,
    "VLD": _VLD,
    "VSD10": _VSD10,
    "MD10": _MD10,
    "TABLE1": _TABLE1,
    "TABLE4": _TABLE4,
    **_DP,
}

PRESET_NAMES = (
    "VSD3",
    "SD",
    "MD",
    "LD",
    "VLD",
    "VSD10",
    "MD10",
    "DP1",
    "DP2",
    "DP3",
    "DP4",
    "DP5",
    "DP6",
    "TABLE1",
    "TABLE3(x)",
    "TABLE4",
    "VSVC",
    "SVC",
    "MVC",
    "FVC",
    "VFVC",
)


def table3(x: int) -> DelayTable:
    """Two links; the second link's NSI ages by a tunable x at the first."""
    if x < 1:
        raise ValueError("x must be >= 1")
    return DelayTable(((0, 1), (x, 0)))


def preset(name: str, x: int | None = None):
    """Named delay table or channel profile; TABLE3 needs its x parameter."""
    if name in DELAY_PRESETS:
        return DelayTable(DELAY_PRESETS[name])
    if name in PROFILE_CROSSOVERS:
        return ChannelProfile.named(name)
    if name == "TABLE3" or name == "TABLE3(x)":
        if x is None:
            raise UnknownPreset("TABLE3 needs the x parameter")
        return table3(x)
    raise UnknownPreset(f"unknown preset {name!r}")


def vsd(num_links: int) -> DelayTable:
    """Very-small-delays profile for 2..10 links."""
    if not 2 <= num_links <= 10:
        raise ValueError("VSD profiles cover 2..10 links")
    return DelayTable(_VSD10).submatrix(num_links)


def md(num_links: int) -> DelayTable:
    """Medium-delays profile for 2..10 links."""
    if not 2 <= num_links <= 10:
        raise ValueError("MD profiles cover 2..10 links")
    return DelayTable(_MD10).submatrix(num_links)
