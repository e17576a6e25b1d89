from __future__ import annotations

from typing import Any, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..evolve.stepper import EvolutionConfig
from ..fields.grid import SpatialGrid
from ..model.nonlinearity import (
    CompositeNonlinearity,
    HartreeKernel,
    HartreeNonlinearity,
    LocalNonlinearity,
    Nonlinearity,
    PowerNonlinearity,
    cubic_quintic,
    saturable,
)
from ..model.potential import PotentialSpec
from ..profile.types import ParameterDomain, SolitonParams

SCHEMA_VERSION = 1


class GridBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: Literal[1, 2] = 1
    points: int = 2048
    half_extent: float = 40.0

    def build(self) -> SpatialGrid:
        return SpatialGrid(self.dimension, self.half_extent, self.points)


class KernelBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape: Literal["gaussian", "delta"] = "gaussian"
    width: float = 0.5
    coupling: float = 1.0


class NonlinearityBlock(BaseModel):
    """``kind`` selects the local part; ``hartree`` adds a convolution term."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["power", "saturable", "cubic_quintic", "none"] = "power"
    exponent: float = 1.0
    coupling: float = 1.0
    saturation: float = 0.1
    quintic: float = 0.0
    hartree: Optional[KernelBlock] = None

    @model_validator(mode="after")
    def _has_a_term(self) -> "NonlinearityBlock":
        if self.kind == "none" and self.hartree is None:
            raise ValueError("nonlinearity needs a local part or a hartree block")
        return self

    def _local(self) -> Optional[LocalNonlinearity]:
        if self.kind == "power":
            return PowerNonlinearity(exponent=self.exponent, coupling=self.coupling)
        if self.kind == "saturable":
            return saturable(self.coupling, self.saturation)
        if self.kind == "cubic_quintic":
            return cubic_quintic(self.coupling, self.quintic)
        return None

    def build(self) -> Nonlinearity:
        local = self._local()
        if self.hartree is None:
            assert local is not None
            return local
        hartree = HartreeNonlinearity(
            kernel=HartreeKernel(self.hartree.shape, self.hartree.width),
            coupling=self.hartree.coupling,
        )
        if local is None:
            return hartree
        return CompositeNonlinearity(local=local, hartree=hartree)


class PotentialBlock(BaseModel):
    """Either ``eps_v`` with an amplitude, or the raw ``rate``."""

    model_config = ConfigDict(extra="forbid")

    family: Literal["zero", "cosine", "gaussian_well"] = "zero"
    eps_v: Optional[float] = None
    amplitude: float = 0.1
    rate: Optional[List[float]] = None

    @model_validator(mode="after")
    def _one_parameterization(self) -> "PotentialBlock":
        if self.family == "zero":
            return self
        if (self.eps_v is None) == (self.rate is None):
            raise ValueError("give exactly one of eps_v or rate for a non-zero potential")
        if self.eps_v is not None and self.eps_v < 0:
            raise ValueError("eps_v must be non-negative")
        return self

    def build(self, dimension: int, mu0: float) -> PotentialSpec:
        if self.family == "zero":
            return PotentialSpec.zero(dimension, mu0)
        if self.eps_v is not None:
            return PotentialSpec.from_eps(self.family, self.eps_v, self.amplitude, dimension, mu0)
        assert self.rate is not None
        if self.family == "cosine":
            return PotentialSpec.cosine(self.amplitude, self.rate, dimension, mu0)
        return PotentialSpec.gaussian_well(self.amplitude, self.rate[0], dimension, mu0)


class InitialBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    position: List[float] = Field(default_factory=list)
    velocity: List[float] = Field(default_factory=list)
    phase: float = 0.0
    mu: float = 1.0
    perturbation: Literal["none", "bump", "random"] = "none"
    eps0: float = 0.0
    position_scale: Literal["absolute", "potential"] = "absolute"
    bump_width: float = 1.0
    bump_center: List[float] = Field(default_factory=list)

    @field_validator("eps0")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("eps0 must be non-negative")
        return value

    @field_validator("mu")
    @classmethod
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("mu must be positive")
        return value

    def _padded(self, values: List[float], dimension: int, name: str) -> tuple[float, ...]:
        if not values:
            return (0.0,) * dimension
        if len(values) != dimension:
            raise ValueError(f"initial.{name} needs {dimension} entries")
        return tuple(float(x) for x in values)

    def sigma(self, dimension: int) -> SolitonParams:
        return SolitonParams(
            a=self._padded(self.position, dimension, "position"),
            v=self._padded(self.velocity, dimension, "velocity"),
            gamma=self.phase,
            mu=self.mu,
        )

    def center(self, dimension: int) -> tuple[float, ...]:
        return self._padded(self.bump_center, dimension, "bump_center")


class EvolutionBlock(BaseModel):
    """``t_end`` wins over ``horizon``; the horizon gives t_end = c_T/(ε_V + ε₀²)."""

    model_config = ConfigDict(extra="forbid")

    dt: float = 0.005
    t_end: Optional[float] = None
    horizon: float = 1.0
    checkpoint: Optional[float] = None
    dealias: bool = False
    mass_tolerance: float = 1e-10
    energy_tolerance: float = 1e-4
    snapshots: bool = False

    @field_validator("dt")
    @classmethod
    def _positive_dt(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("dt must be positive")
        return value


class TrackingBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    stride: int = 10
    max_iterations: int = 50
    tolerance: float = 1e-10
    trust_factor: float = 0.3

    @field_validator("stride")
    @classmethod
    def _stride(cls, value: int) -> int:
        if value < 1:
            raise ValueError("stride must be at least 1")
        return value


class ParametersBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mu_min: float = 0.5
    mu_max: float = 2.0

    def build(self) -> ParameterDomain:
        return ParameterDomain(self.mu_min, self.mu_max)


class SpectrumBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k_max: Optional[int] = None
    radial_points: Optional[int] = None
    dvr_points: Optional[int] = None
    plane_points: Optional[int] = None
    mass_points: List[float] = Field(default_factory=list)


class RunBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "run"
    output: Optional[str] = None
    seed: int = 0


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: GridBlock = Field(default_factory=GridBlock)
    nonlinearity: NonlinearityBlock = Field(default_factory=NonlinearityBlock)
    potential: PotentialBlock = Field(default_factory=PotentialBlock)
    initial: InitialBlock = Field(default_factory=InitialBlock)
    evolution: EvolutionBlock = Field(default_factory=EvolutionBlock)
    tracking: TrackingBlock = Field(default_factory=TrackingBlock)
    parameters: ParametersBlock = Field(default_factory=ParametersBlock)
    spectrum: SpectrumBlock = Field(default_factory=SpectrumBlock)
    run: RunBlock = Field(default_factory=RunBlock)

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    def sigma0(self) -> SolitonParams:
        """σ₀; with ``position_scale = "potential"`` the position is in units of 1/κ."""
        sigma = self.initial.sigma(self.dimension)
        if self.initial.position_scale == "absolute" or self.potential.family == "zero":
            return sigma
        rates = self.build_potential().rate
        return sigma.replace(a=tuple(a / k if k else a for a, k in zip(sigma.a, rates)))

    def build_potential(self) -> PotentialSpec:
        return self.potential.build(self.dimension, self.initial.mu)

    def build_nonlinearity(self) -> Nonlinearity:
        return self.nonlinearity.build()

    def t_end(self) -> float:
        if self.evolution.t_end is not None:
            return self.evolution.t_end
        scale = self.build_potential().eps_v + self.initial.eps0**2
        if scale <= 0:
            raise ValueError("evolution.t_end is required when eps_v and eps0 both vanish")
        return self.evolution.horizon / scale

    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(
            dt=self.evolution.dt,
            t_end=self.t_end(),
            stride=self.tracking.stride,
            dealias=self.evolution.dealias,
            mass_tolerance=self.evolution.mass_tolerance,
            energy_tolerance=self.evolution.energy_tolerance,
        )

    def with_value(self, parameter: str, value: float) -> "ExperimentConfig":
        """Copy with one sweep parameter replaced (``eps_V``, ``eps_0`` or ``dt``)."""
        data: dict[str, Any] = self.model_dump()
        if parameter == "eps_V":
            data["potential"]["eps_v"] = value
            data["potential"]["rate"] = None
        elif parameter == "eps_0":
            data["initial"]["eps0"] = value
        elif parameter == "dt":
            data["evolution"]["dt"] = value
        else:
            raise ValueError(f"unknown sweep parameter {parameter!r}")
        data["run"]["name"] = f"{self.run.name}-{parameter}-{value:g}"
        return ExperimentConfig.model_validate(data)
