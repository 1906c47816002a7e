"""Dense labeled voxel volumes on a physical grid.

A volume is a 3D array of uint8 label codes on a regular grid with physical
spacing in millimeters.  Code 0 always means empty space; every other code
names one segmented structure through the palette.  Arrays are indexed
``arr[i, j, k]`` with i along x, j along y, k along z, and are serialized
x-fastest (i varies quickest, then j, then k).

Conventions used throughout the package:

* voxel (i, j, k) has its center at ``origin + (index + 0.5) * spacing``
* a world point maps to the voxel whose cell contains it,
  ``floor((p - origin) / spacing)``
* the linear index of (i, j, k) is ``i + nx * (j + ny * k)``
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MalformedHeader
from .fileio import read_blob, write_blob

__all__ = [
    "GridSpec",
    "LabelVolume",
    "BinaryMask",
    "mask_of",
    "boundary_of",
    "save_volume",
    "load_volume",
    "VOLUME_VERSION",
]

VOLUME_VERSION = "CAPV1"

EMPTY = 0  # label code reserved for empty space


# ----------------------------------------------------------------------------
# grid geometry
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Geometry of a voxel grid: shape, spacing, and world origin.

    Parameters
    ----------
    dims : (nx, ny, nz)
        Number of voxels along each axis, all >= 1.
    spacing_mm : (sx, sy, sz)
        Physical edge length of one voxel along each axis, all > 0.
    origin_mm : (ox, oy, oz)
        World coordinate of the corner of voxel (0, 0, 0).  The center of
        that voxel sits at ``origin + 0.5 * spacing``.
    """

    dims: tuple[int, int, int]
    spacing_mm: tuple[float, float, float] = (0.48, 0.48, 0.48)
    origin_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        spacing = tuple(float(s) for s in self.spacing_mm)
        origin = tuple(float(o) for o in self.origin_mm)
        if len(dims) != 3 or any(n < 1 for n in dims):
            raise ValueError(f"dims must be three positive ints, got {self.dims}")
        if len(spacing) != 3 or any(not np.isfinite(s) or s <= 0 for s in spacing):
            raise ValueError(f"spacing_mm must be three positive floats, got {self.spacing_mm}")
        if len(origin) != 3 or any(not np.isfinite(o) for o in origin):
            raise ValueError(f"origin_mm must be three finite floats, got {self.origin_mm}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing_mm", spacing)
        object.__setattr__(self, "origin_mm", origin)

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def index_to_world(self, ijk) -> np.ndarray:
        """World coordinates (mm) of the center of voxel `ijk`."""
        idx = np.asarray(ijk, dtype=np.float64)
        return np.asarray(self.origin_mm) + (idx + 0.5) * np.asarray(self.spacing_mm)

    def world_to_index(self, point_mm) -> tuple[int, int, int]:
        """Voxel whose cell contains the world point (may be out of grid)."""
        p = np.asarray(point_mm, dtype=np.float64)
        rel = (p - np.asarray(self.origin_mm)) / np.asarray(self.spacing_mm)
        i, j, k = np.floor(rel).astype(np.int64)
        return int(i), int(j), int(k)

    def contains_index(self, ijk) -> bool:
        i, j, k = ijk
        nx, ny, nz = self.dims
        return 0 <= i < nx and 0 <= j < ny and 0 <= k < nz

    def linear_index(self, ijk) -> int:
        """Position of voxel `ijk` in the x-fastest serialization order."""
        i, j, k = ijk
        nx, ny, _ = self.dims
        return int(i) + nx * (int(j) + ny * int(k))


def _as_grid_array(spec: GridSpec, arr: np.ndarray, dtype, what: str) -> np.ndarray:
    a = np.asarray(arr, dtype=dtype)
    if a.shape != spec.dims:
        raise ValueError(f"{what} shape {a.shape} does not match grid dims {spec.dims}")
    return a


# ----------------------------------------------------------------------------
# volumes and masks
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LabelVolume:
    """A uint8 label array plus the palette naming each code.

    Invariants: the palette covers every code present in `labels`, and code
    0 is always named "EMPTY".
    """

    spec: GridSpec
    labels: np.ndarray
    palette: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        labels = _as_grid_array(self.spec, self.labels, np.uint8, "labels")
        palette = {int(k): str(v) for k, v in self.palette.items()}
        palette.setdefault(EMPTY, "EMPTY")
        if palette[EMPTY] != "EMPTY":
            raise ValueError("palette code 0 is reserved for EMPTY")
        present = set(int(c) for c in np.unique(labels))
        missing = present - set(palette)
        if missing:
            raise ValueError(f"palette has no name for codes {sorted(missing)}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "palette", palette)

    def codes_for(self, *names: str) -> tuple[int, ...]:
        """Label codes for the given palette names, in palette code order."""
        wanted = set(names)
        found = tuple(c for c in sorted(self.palette) if self.palette[c] in wanted)
        known = {self.palette[c] for c in found}
        if known != wanted:
            raise KeyError(f"names not in palette: {sorted(wanted - known)}")
        return found


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """One boolean per voxel on a grid."""

    spec: GridSpec
    bits: np.ndarray

    def __post_init__(self):
        bits = _as_grid_array(self.spec, self.bits, bool, "bits")
        object.__setattr__(self, "bits", bits)

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def mask_of(volume: LabelVolume, codes) -> BinaryMask:
    """Mask of voxels whose label is in `codes`.

    Parameters
    ----------
    volume : LabelVolume
    codes : iterable of int
        Label codes selecting the structure.  May be empty, in which case
        the mask is empty too.
    """
    codes = np.asarray(sorted(set(int(c) for c in codes)), dtype=np.uint8)
    bits = np.isin(volume.labels, codes)
    return BinaryMask(volume.spec, bits)


def boundary_of(mask: BinaryMask) -> BinaryMask:
    """Set voxels with at least one 6-connected neighbor outside the set.

    Voxels beyond the grid edge count as outside, so a structure touching
    the edge has boundary there.
    """
    bits = mask.bits
    has_all = bits.copy()
    for axis in range(3):
        for shift in (-1, 1):
            nbr = np.zeros_like(bits)  # out-of-grid neighbors stay unset
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            if shift > 0:
                src[axis] = slice(1, None)
                dst[axis] = slice(None, -1)
            else:
                src[axis] = slice(None, -1)
                dst[axis] = slice(1, None)
            nbr[tuple(dst)] = bits[tuple(src)]
            has_all &= nbr
    return BinaryMask(mask.spec, bits & ~has_all)


# ----------------------------------------------------------------------------
# file format
# ----------------------------------------------------------------------------

def save_volume(volume: LabelVolume, path) -> None:
    """Write `volume` to `path` in the labeled-volume format.

    The file is one canonical JSON header line followed by the uint8 label
    payload in x-fastest order.  Saving the same volume twice produces
    byte-identical files.
    """
    spec = volume.spec
    header = {
        "version": VOLUME_VERSION,
        "dims": list(spec.dims),
        "spacing_mm": list(spec.spacing_mm),
        "origin_mm": list(spec.origin_mm),
        "palette": {str(c): volume.palette[c] for c in sorted(volume.palette)},
    }
    write_blob(path, header, volume.labels.ravel(order="F").tobytes())


def _spec_from_header(path, header: dict) -> GridSpec:
    try:
        dims = header["dims"]
        spacing = header["spacing_mm"]
        origin = header["origin_mm"]
    except KeyError as exc:
        raise MalformedHeader(f"{path}: missing {exc}") from None
    try:
        return GridSpec(tuple(dims), tuple(spacing), tuple(origin))
    except (TypeError, ValueError) as exc:
        raise MalformedHeader(f"{path}: {exc}") from None


def load_volume(path) -> LabelVolume:
    """Read a labeled-volume file written by save_volume.

    Raises
    ------
    MalformedHeader, UnknownVersion, DimensionMismatch
    """
    header, payload = read_blob(path, VOLUME_VERSION)
    spec = _spec_from_header(path, header)
    if len(payload) != spec.n_voxels:
        raise DimensionMismatch(
            f"{path}: payload is {len(payload)} bytes, dims need {spec.n_voxels}")
    try:
        palette = {int(c): str(n) for c, n in header.get("palette", {}).items()}
    except (TypeError, ValueError) as exc:
        raise MalformedHeader(f"{path}: bad palette: {exc}") from None
    labels = np.frombuffer(payload, dtype=np.uint8).reshape(spec.dims, order="F")
    try:
        return LabelVolume(spec, labels.copy(), palette)
    except ValueError as exc:
        raise MalformedHeader(f"{path}: {exc}") from None
