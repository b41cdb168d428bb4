"""Experiment configuration: key-value config files merged with CLI flags.

Config files are line-oriented `key = value`; '#' starts a comment. The
`levelset` key may repeat and feeds the stack grammar of cutvem.levelset;
`kappa` may repeat as `kappa = <domain_id> <value>`. Unknown keys are
errors, not warnings, and every numeric value is range-checked before any
work starts.
"""

from dataclasses import dataclass, field

from .agglomerate import AgglomerationParams
from .elements import MaterialSpec
from .errors import ConfigError
from .levelset import parse_levelset_program

_MESH_KINDS = ("structured_tri", "anisotropic_tri", "structured_quad", "file")
_SEQUENCES = ("uniform", "anisotropic", "clipped", "annulus", "bimaterial")
_PROBLEMS = ("sinsin", "clipped_dirichlet", "clipped_mixed", "annulus",
             "bimaterial")

_KNOWN_KEYS = {
    "mesh", "levelset", "sigma_eps", "beta", "num_iter", "n", "seed", "out",
    "levels", "base", "method", "agg", "problem", "ratio", "amplitude",
    "band", "kappa", "tau_multiplier", "jobs", "sequence", "background",
    "grid",
}


@dataclass
class ExperimentConfig:
    mesh: tuple = None              # (kind, args...)
    levelset_lines: list = field(default_factory=list)
    sigma_eps: float = 0.2
    beta: float = 1.2
    num_iter: int = 5
    n: int = 50
    seed: int = 1
    out: str = "out"
    levels: int = 3
    base: int = 0                   # 0 = per-command default
    method: str = "vem"
    agg: bool = True
    problem: str = "sinsin"
    ratio: float = 10.0
    amplitude: float = 0.15
    band: float = 1.25
    kappa: dict = field(default_factory=dict)
    tau_multiplier: float = 1.0
    jobs: int = 1
    sequence: str = "uniform"
    background: str = "tri"
    grid: int = 48

    def agg_params(self):
        return AgglomerationParams(sigma_eps=self.sigma_eps, beta=self.beta,
                                   num_iter=self.num_iter)

    def material(self):
        kappa = self.kappa if self.kappa else 1.0
        return MaterialSpec(kappa=kappa, tau_multiplier=self.tau_multiplier)

    def levelset(self):
        if not self.levelset_lines:
            raise ConfigError("no levelset configured")
        return parse_levelset_program(self.levelset_lines)

    def echo(self):
        d = {k: v for k, v in self.__dict__.items()}
        d["levelset_lines"] = list(self.levelset_lines)
        return d


def _positive(key, value):
    if value <= 0:
        raise ConfigError(f"{key} must be positive, got {value}")
    return value


def apply_pair(cfg, key, value):
    key = key.strip()
    value = value.strip()
    if key not in _KNOWN_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if key == "mesh":
            toks = value.split()
            if not toks or toks[0] not in _MESH_KINDS:
                raise ConfigError(f"unknown mesh kind in {value!r}")
            if toks[0] == "file":
                cfg.mesh = ("file", toks[1])
            else:
                nx, ny = int(toks[1]), int(toks[2])
                domain = tuple(float(t) for t in toks[3:7]) if len(toks) > 3 \
                    else (0.0, 0.0, 1.0, 1.0)
                if nx < 2 or ny < 2:
                    raise ConfigError("mesh sizes must be at least 2")
                cfg.mesh = (toks[0], nx, ny, domain)
        elif key == "levelset":
            cfg.levelset_lines.append(value)
        elif key == "kappa":
            did, kap = value.split()
            cfg.kappa[int(did)] = _positive("kappa", float(kap))
        elif key in ("sigma_eps",):
            v = float(value)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"sigma_eps must lie in (0,1), got {v}")
            cfg.sigma_eps = v
        elif key == "beta":
            v = float(value)
            if v <= 1.0:
                raise ConfigError(f"beta must exceed 1, got {v}")
            cfg.beta = v
        elif key in ("num_iter", "n", "levels", "base", "jobs", "grid"):
            setattr(cfg, key, int(_positive(key, int(value))))
        elif key == "seed":
            cfg.seed = int(value)
        elif key in ("ratio", "tau_multiplier"):
            setattr(cfg, key, _positive(key, float(value)))
        elif key in ("amplitude", "band"):
            v = float(value)
            if v < 0:
                raise ConfigError(f"{key} must be nonnegative, got {v}")
            setattr(cfg, key, v)
        elif key == "method":
            if value not in ("fem", "vem"):
                raise ConfigError(f"method must be fem or vem, got {value!r}")
            cfg.method = value
        elif key == "agg":
            if value not in ("on", "off"):
                raise ConfigError(f"agg must be on or off, got {value!r}")
            cfg.agg = value == "on"
        elif key == "problem":
            if value not in _PROBLEMS:
                raise ConfigError(f"unknown problem {value!r}")
            cfg.problem = value
        elif key == "sequence":
            if value not in _SEQUENCES:
                raise ConfigError(f"unknown sequence {value!r}")
            cfg.sequence = value
        elif key == "background":
            if value not in ("tri", "quad"):
                raise ConfigError(f"background must be tri or quad")
            cfg.background = value
        elif key == "out":
            cfg.out = value
    except (ValueError, IndexError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return cfg


def load_config(path):
    cfg = ExperimentConfig()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            try:
                apply_pair(cfg, key, value)
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return cfg
