"""Symbol alphabets, bit mapping and SNR calibration for SM, SSK, MIMO-OOK and SISO-CSK."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.channel import MAX_LINKS, SystemGeometry, paired_peak_concentration
from src.errors import ConfigurationError

logger = logging.getLogger(__name__)

Bits = Union[str, Sequence[int]]


class SchemeKind(str, Enum):
    SM = "sm"
    SSK = "ssk"
    MIMO_OOK = "mimo_ook"
    SISO_CSK = "siso_csk"


def is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


def _order_prefix(order: int) -> str:
    return {2: "B", 4: "Q"}.get(order, f"{order}-")


class Scheme(BaseModel):
    """Modulation scheme: which of the four link types, with N links and CSK order M."""

    model_config = ConfigDict(frozen=True)

    kind: SchemeKind
    n_links: int = Field(..., gt=0, le=MAX_LINKS)
    csk_order: int = Field(..., gt=0)

    @model_validator(mode="after")
    def _check_orders(self) -> "Scheme":
        if not is_power_of_two(self.n_links):
            raise ValueError(f"n_links must be a power of 2, got {self.n_links}")
        if not is_power_of_two(self.csk_order):
            raise ValueError(f"csk_order must be a power of 2, got {self.csk_order}")
        if self.kind is SchemeKind.SSK:
            if self.csk_order != 1:
                raise ValueError("csk_order must be 1 for SSK")
            if self.n_links < 2:
                raise ValueError("n_links must be at least 2 for SSK")
        elif self.kind is SchemeKind.MIMO_OOK:
            if self.csk_order != 2:
                raise ValueError("csk_order must be 2 for MIMO-OOK")
        elif self.kind is SchemeKind.SISO_CSK:
            if self.n_links != 1:
                raise ValueError("n_links must be 1 for SISO-CSK")
            if self.csk_order < 2:
                raise ValueError("csk_order must be at least 2 for SISO-CSK")
        return self

    @property
    def space_bits(self) -> int:
        if self.kind in (SchemeKind.SM, SchemeKind.SSK):
            return int(math.log2(self.n_links))
        return 0

    @property
    def level_bits(self) -> int:
        if self.kind in (SchemeKind.SM, SchemeKind.SISO_CSK):
            return int(math.log2(self.csk_order))
        return 0

    @property
    def bits_per_symbol(self) -> int:
        if self.kind is SchemeKind.MIMO_OOK:
            return self.n_links
        return self.space_bits + self.level_bits

    @property
    def n_symbols(self) -> int:
        return 2**self.bits_per_symbol

    @property
    def label(self) -> str:
        n, m = self.n_links, self.csk_order
        if self.kind is SchemeKind.SSK:
            return f"{_order_prefix(n)}SSK"
        if self.kind is SchemeKind.SM:
            return f"{n}x{n} SM-{_order_prefix(m)}CSK"
        if self.kind is SchemeKind.MIMO_OOK:
            return f"{n}x{n} MIMO-OOK"
        return f"SISO-{_order_prefix(m)}CSK"


class CskAlphabet(BaseModel):
    """Molecule counts per pulse, S_0 < S_1 < ... < S_{M-1}."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    levels: Tuple[float, ...] = Field(..., min_length=1)

    @field_validator("levels")
    @classmethod
    def _check_levels(cls, levels: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(level < 0 for level in levels):
            raise ValueError("levels must be non-negative")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be strictly increasing")
        return levels

    @property
    def size(self) -> int:
        return len(self.levels)

    def as_array(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.levels, dtype=float)


class MolecularSymbol(BaseModel):
    """One symbol interval: active transmitter and level, or the per-link bits for MIMO-OOK."""

    model_config = ConfigDict(frozen=True)

    space_index: int = Field(0, ge=0)
    level_index: int = Field(0, ge=0)
    bits: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class SymbolBatch:
    """A sequence of symbols stored column-wise for vectorized simulation."""

    space: npt.NDArray[np.int64]
    level: npt.NDArray[np.int64]
    bits: Optional[npt.NDArray[np.int8]] = None

    def __len__(self) -> int:
        return int(self.space.shape[0])

    def symbol(self, k: int) -> MolecularSymbol:
        bits = tuple(int(b) for b in self.bits[k]) if self.bits is not None else None
        return MolecularSymbol(space_index=int(self.space[k]), level_index=int(self.level[k]), bits=bits)

    def window(self, start: int, stop: int) -> "SymbolBatch":
        bits = self.bits[start:stop] if self.bits is not None else None
        return SymbolBatch(space=self.space[start:stop], level=self.level[start:stop], bits=bits)

    @classmethod
    def from_symbols(cls, symbols: Sequence[MolecularSymbol]) -> "SymbolBatch":
        space = np.array([s.space_index for s in symbols], dtype=np.int64)
        level = np.array([s.level_index for s in symbols], dtype=np.int64)
        bits = None
        if symbols and symbols[0].bits is not None:
            bits = np.array([s.bits for s in symbols], dtype=np.int8)
        return cls(space=space, level=level, bits=bits)


def default_level_ratios(scheme: Scheme) -> Tuple[float, ...]:
    """Relative level sizes used when the configuration does not give any.

    SM uses (1, 2, ..., M), so BCSK has S_1 = 2 S_0; SISO-CSK uses (0, 1, ..., M-1),
    so QCSK has S_0 = 0 and S_3 = 3/2 S_2 = 3 S_1.
    """
    m = scheme.csk_order
    if scheme.kind is SchemeKind.SSK:
        return (1.0,)
    if scheme.kind is SchemeKind.SM:
        return tuple(float(k + 1) for k in range(m))
    if scheme.kind is SchemeKind.MIMO_OOK:
        return (0.0, 1.0)
    return tuple(float(k) for k in range(m))


def _check_ratios(scheme: Scheme, ratios: Tuple[float, ...]) -> None:
    key = "level_ratios"
    if len(ratios) != scheme.csk_order:
        raise ConfigurationError(f"expected {scheme.csk_order} ratios for {scheme.label}, got {len(ratios)}", key)
    if not all(math.isfinite(r) for r in ratios):
        raise ConfigurationError("ratios must be finite", key)
    if any(b <= a for a, b in zip(ratios, ratios[1:])):
        raise ConfigurationError("ratios must be strictly increasing", key)
    if scheme.kind in (SchemeKind.SM, SchemeKind.SSK) and ratios[0] <= 0:
        raise ConfigurationError(f"{scheme.label} needs every level to be positive (S_0 > 0)", key)
    if scheme.kind is SchemeKind.MIMO_OOK and ratios[0] != 0:
        raise ConfigurationError("OOK needs S_0 = 0", key)
    if ratios[0] < 0:
        raise ConfigurationError("ratios must be non-negative", key)
    if ratios[-1] <= 0:
        raise ConfigurationError("at least one level must be positive", key)


def link_gain(geom: SystemGeometry) -> float:
    """Molecules counted at the paired receiver per molecule released, h_jj(t_p) V_RX."""
    return paired_peak_concentration(geom, 1.0) * geom.receiver_volume


def snr_linear(scheme: Scheme, geom: SystemGeometry, alphabet: CskAlphabet) -> float:
    """Average received signal power over noise power for the scheme's SNR definition."""
    gain = link_gain(geom)
    if scheme.kind is SchemeKind.MIMO_OOK:
        # Only N/2 transmitters fire on average, each with S_1 molecules.
        return 2.0 * alphabet.levels[1] * gain / scheme.n_links
    return float(np.mean(alphabet.as_array())) * gain


def alphabet_snr_db(scheme: Scheme, geom: SystemGeometry, alphabet: CskAlphabet) -> float:
    return 10.0 * math.log10(snr_linear(scheme, geom, alphabet))


def calibrate_alphabet(
    scheme: Scheme,
    geom: SystemGeometry,
    snr_db: float,
    level_ratios: Optional[Sequence[float]] = None,
) -> CskAlphabet:
    """Scale the scheme's level ratios so that the link runs at ``snr_db``."""
    if not math.isfinite(snr_db):
        raise ConfigurationError(f"SNR must be finite, got {snr_db}", "snr_db")
    if scheme.n_links != geom.n_links:
        raise ConfigurationError(
            f"scheme has {scheme.n_links} links but geometry has {geom.n_links}", "n_links"
        )
    ratios = tuple(float(r) for r in level_ratios) if level_ratios is not None else default_level_ratios(scheme)
    _check_ratios(scheme, ratios)

    unit = CskAlphabet(levels=ratios)
    scale = 10.0 ** (snr_db / 10.0) / snr_linear(scheme, geom, unit)
    alphabet = CskAlphabet(levels=tuple(r * scale for r in ratios))
    logger.debug(f"Calibrated {scheme.label} at {snr_db:g} dB: levels={alphabet.levels}")
    return alphabet


def _as_bits(bits: Bits) -> Tuple[int, ...]:
    if isinstance(bits, str):
        if any(c not in "01" for c in bits):
            raise ValueError(f"bit string may only contain 0 and 1, got {bits!r}")
        return tuple(int(c) for c in bits)
    values = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in values):
        raise ValueError("bits must be 0 or 1")
    return values


def encode(scheme: Scheme, bits: Bits) -> MolecularSymbol:
    """Map one symbol's worth of bits to a symbol; the leading log2 N bits pick the transmitter."""
    values = _as_bits(bits)
    if len(values) != scheme.bits_per_symbol:
        raise ValueError(f"{scheme.label} carries {scheme.bits_per_symbol} bits per symbol, got {len(values)}")
    if scheme.kind is SchemeKind.MIMO_OOK:
        return MolecularSymbol(bits=values)

    def to_int(chunk: Tuple[int, ...]) -> int:
        return int("".join(map(str, chunk)), 2) if chunk else 0

    return MolecularSymbol(
        space_index=to_int(values[: scheme.space_bits]),
        level_index=to_int(values[scheme.space_bits :]),
    )


def decode(scheme: Scheme, symbol: MolecularSymbol) -> str:
    """Inverse of :func:`encode`."""
    validate_symbol(scheme, symbol)
    if scheme.kind is SchemeKind.MIMO_OOK:
        return "".join(str(b) for b in symbol.bits or ())
    space = format(symbol.space_index, f"0{scheme.space_bits}b") if scheme.space_bits else ""
    level = format(symbol.level_index, f"0{scheme.level_bits}b") if scheme.level_bits else ""
    return space + level


def validate_symbol(scheme: Scheme, symbol: MolecularSymbol) -> None:
    if scheme.kind is SchemeKind.MIMO_OOK:
        if symbol.bits is None or len(symbol.bits) != scheme.n_links:
            raise ValueError(f"MIMO-OOK symbols need {scheme.n_links} bits")
        if any(b not in (0, 1) for b in symbol.bits):
            raise ValueError("bits must be 0 or 1")
        return
    if symbol.space_index >= scheme.n_links:
        raise ValueError(f"space index {symbol.space_index} out of range for {scheme.n_links} links")
    if symbol.level_index >= scheme.csk_order:
        raise ValueError(f"level index {symbol.level_index} out of range for M={scheme.csk_order}")


def emission_vector(
    scheme: Scheme, symbol: MolecularSymbol, alphabet: CskAlphabet
) -> npt.NDArray[np.float64]:
    """Molecules released by each transmitter for one symbol."""
    validate_symbol(scheme, symbol)
    levels = alphabet.as_array()
    if scheme.kind is SchemeKind.MIMO_OOK:
        return levels[np.asarray(symbol.bits)]
    emission = np.zeros(scheme.n_links)
    emission[symbol.space_index] = levels[symbol.level_index]
    return emission


def emission_matrix(
    scheme: Scheme, batch: SymbolBatch, alphabet: CskAlphabet
) -> npt.NDArray[np.float64]:
    """Row k is :func:`emission_vector` of symbol k."""
    levels = alphabet.as_array()
    if scheme.kind is SchemeKind.MIMO_OOK:
        assert batch.bits is not None
        return levels[batch.bits]
    emission = np.zeros((len(batch), scheme.n_links))
    emission[np.arange(len(batch)), batch.space] = levels[batch.level]
    return emission


def random_symbols(scheme: Scheme, count: int, rng: np.random.Generator) -> SymbolBatch:
    """Draw ``count`` symbols from uniformly distributed bits."""
    if scheme.kind is SchemeKind.MIMO_OOK:
        bits = rng.integers(0, 2, size=(count, scheme.n_links), dtype=np.int8)
        zeros = np.zeros(count, dtype=np.int64)
        return SymbolBatch(space=zeros, level=zeros.copy(), bits=bits)
    values = rng.integers(0, scheme.n_symbols, size=count, dtype=np.int64)
    return SymbolBatch(
        space=values >> scheme.level_bits,
        level=values & (2**scheme.level_bits - 1),
    )


def symbol_errors(scheme: Scheme, sent: SymbolBatch, decided: SymbolBatch) -> npt.NDArray[np.bool_]:
    """Per-symbol error flags; a MIMO-OOK symbol is wrong when any link bit is wrong."""
    if scheme.kind is SchemeKind.MIMO_OOK:
        assert sent.bits is not None and decided.bits is not None
        return np.any(sent.bits != decided.bits, axis=-1)
    if scheme.kind is SchemeKind.SSK:
        return sent.space != decided.space
    if scheme.kind is SchemeKind.SISO_CSK:
        return sent.level != decided.level
    return (sent.space != decided.space) | (sent.level != decided.level)


def all_symbols(scheme: Scheme) -> List[MolecularSymbol]:
    """Every symbol of the scheme, in bit order."""
    width = scheme.bits_per_symbol
    return [encode(scheme, format(value, f"0{width}b") if width else "") for value in range(scheme.n_symbols)]
