"""INI scenario files.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` or
``;`` start a comment. Values are floats, integers, booleans
(``true``/``false``), names from a fixed list, or 3-vectors written as three
comma-separated floats. Sections and keys are listed in :data:`SCHEMA`;
anything else is rejected with the line number where it appears.

A ``preset`` in ``[mixture]`` expands to the preset's parameters; only the
keys the preset leaves free may be given alongside it.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import params as mp


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _vec3(text: str):
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != 3:
        raise ValueError("expected three comma-separated numbers")
    return tuple(float(p) for p in parts)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected true or false")


def _int(text: str) -> int:
    return int(text.strip(), 10)


def _choice(*names):
    def conv(text: str) -> str:
        t = text.strip()
        if t not in names:
            raise ValueError(f"expected one of {', '.join(names)}")
        return t
    conv.choices = names
    return conv


def _str(text: str) -> str:
    return text.strip()


_BOUNDARY = _choice("periodic", "outflow")

SCHEMA: dict[str, dict] = {
    "mixture": {
        "preset": _choice(*mp.PRESETS), "m1": float, "m2": float,
        "nu11": float, "nu21": float, "nu22": float, "epsilon": float,
        "delta": float, "alpha": float, "gamma": float,
        "chi_over_nu": float, "strict": _bool,
    },
    "grid": {"nodes": _int, "radius": float, "lower": _vec3, "upper": _vec3},
    "initial": {
        "n1": float, "u1": _vec3, "T1": float, "n2": float, "u2": _vec3, "T2": float,
        "profile": _choice("uniform", "sine", "layered"), "amplitude": float,
        "cells": _int, "length": float,
    },
    "solver": {
        "scheme": _choice("exponential", "rk4"), "order": _int, "dt": float, "steps": _int,
        "bc": _BOUNDARY, "splitting": _choice("strang", "lie"), "seed": _int,
        "stop_at_equilibrium": _bool,
    },
    "output": {"out": _str, "cadence": _int, "binary": _bool},
    "mhd": {
        "cells": _int, "length": float, "bc": _BOUNDARY, "Bx": float, "cfl": float,
        "steps": _int, "left_n": float, "left_p": float, "left_u": _vec3, "left_By": float,
        "left_Bz": float, "right_n": float, "right_p": float, "right_u": _vec3,
        "right_By": float, "right_Bz": float,
    },
}

DEFAULTS: dict[str, dict] = {
    "grid": {"nodes": 24, "radius": 6.0},
    "initial": {"n1": 1.0, "u1": (0.0, 0.0, 0.0), "T1": 1.0, "n2": 1.0,
                "u2": (0.0, 0.0, 0.0), "T2": 1.0, "profile": "uniform", "amplitude": 0.1,
                "cells": 64, "length": 1.0},
    "solver": {"scheme": "exponential", "order": 1, "steps": 100, "bc": "periodic",
               "splitting": "strang", "seed": 0, "stop_at_equilibrium": False},
    "output": {"out": "out", "cadence": 1, "binary": False},
    "mhd": {"cells": 400, "length": 1.0, "bc": "outflow", "Bx": 0.75, "cfl": 0.4,
            "steps": 200, "left_n": 1.0, "left_p": 1.0, "left_u": (0.0, 0.0, 0.0),
            "left_By": 1.0, "left_Bz": 0.0, "right_n": 0.125, "right_p": 0.1,
            "right_u": (0.0, 0.0, 0.0), "right_By": -1.0, "right_Bz": 0.0},
}

# Keys that each preset leaves free; the rest are fixed by the preset.
PRESET_FREE = {
    "gross-krook": {"nu11", "nu21", "nu22", "delta", "alpha", "gamma"},
    "hamel": {"nu11", "nu21", "nu22"},
    "plasma": {"nu22", "delta", "alpha", "gamma"},
    "aap": {"nu11", "nu21", "nu22", "chi_over_nu"},
}

SEED_MAX = 2**64 - 1


@dataclass
class ScenarioConfig:
    """Typed contents of a scenario file; only keys present in the file are stored."""

    sections: dict[str, dict] = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        value = self.sections.get(section, {}).get(key)
        if value is None:
            value = DEFAULTS.get(section, {}).get(key, default)
        return value

    def section(self, name: str) -> dict:
        out = dict(DEFAULTS.get(name, {}))
        out.update(self.sections.get(name, {}))
        return out

    @property
    def seed(self) -> int:
        return int(self.get("solver", "seed"))

    @property
    def params(self) -> mp.MixtureParams:
        return mixture_params(self.sections["mixture"])

    def to_text(self) -> str:
        lines = []
        for name in SCHEMA:
            if name not in self.sections:
                continue
            lines.append(f"[{name}]")
            for key in SCHEMA[name]:
                if key in self.sections[name]:
                    lines.append(f"{key} = {_format(self.sections[name][key])}")
            lines.append("")
        return "\n".join(lines)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def mixture_params(mix: dict) -> mp.MixtureParams:
    """MixtureParams from a typed ``[mixture]`` dict (preset expanded)."""
    strict = mix.get("strict", True)
    name = mix.get("preset")
    if name is None:
        keys = ("nu11", "nu21", "nu22", "epsilon", "delta", "alpha", "gamma")
        return mp.MixtureParams(mix["m1"], mix["m2"], strict=strict,
                                **{k: mix[k] for k in keys if k in mix})
    aux = {k: mix[k] for k in PRESET_FREE[name] if k in mix}
    return mp.preset(name, mix["m1"], mix["m2"], aux).replace(strict=strict)


def _line_numbers(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to their first line."""
    out = {}
    section = None
    for k, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]*)\]", line)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), k)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        out.setdefault((section, key), k)
    return out


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate scenario text; raises :class:`ConfigError` on the first problem."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   default_section="\0defaults")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1], exc.lineno) from None
    except configparser.ParsingError as exc:
        raise ConfigError("malformed line", exc.errors[0][0] if exc.errors else None) from None
    lines = _line_numbers(text)

    sections: dict[str, dict] = {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]", lines.get((name, None)))
        typed = {}
        for key, raw in cp.items(name):
            line = lines.get((name, key))
            conv = SCHEMA[name].get(key)
            if conv is None:
                raise ConfigError(f"unknown key {key!r} in [{name}]", line)
            try:
                value = conv(raw)
            except ValueError as exc:
                msg = str(exc) if conv not in (float, _int) else f"expected {_type_name(conv)}"
                raise ConfigError(f"{name}.{key} = {raw!r}: {msg}", line) from None
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"{name}.{key} must be finite", line)
            typed[key] = value
        sections[name] = typed

    if "mixture" not in sections:
        raise ConfigError("missing [mixture]")
    _check(sections, lines)
    return ScenarioConfig(sections)


def _type_name(conv) -> str:
    return {float: "a number", _int: "an integer"}.get(conv, "a value")


def _check(sections: dict, lines: dict) -> None:
    mix = sections["mixture"]
    for key in ("m1", "m2"):
        if key not in mix:
            raise ConfigError(f"[mixture] needs {key}", lines.get(("mixture", None)))
    name = mix.get("preset")
    if name is not None:
        fixed = sorted(set(mix) - PRESET_FREE[name] - {"preset", "m1", "m2", "strict"})
        if fixed:
            raise ConfigError(f"{fixed[0]} is fixed by preset {name!r}",
                              lines.get(("mixture", fixed[0])))
    try:
        params = mixture_params(mix)
        report = mp.validate(params)
    except (mp.ParameterError, ValueError) as exc:
        raise ConfigError(f"invalid mixture parameters: {exc}",
                          lines.get(("mixture", None))) from None
    if not report.valid:
        v = report.violations[0]
        key = re.match(r"[a-z0-9]+", v.constraint).group(0)
        msg = f"{v.constraint} violated: {v.value:.17g} vs {v.bound:.17g}"
        if v.constraint == "gamma<=gamma_max":
            msg += (" (T21 positivity requires gamma <= m1/3 (1-delta)"
                    " ((1+k) delta + 1 - k) with k = m1 epsilon / m2)")
        elif v.message:
            msg += f" ({v.message})"
        raise ConfigError(msg, lines.get(("mixture", key), lines.get(("mixture", None))))

    def positive(section, keys, strict=True):
        for key in keys:
            if key in sections.get(section, {}):
                value = sections[section][key]
                if (value <= 0) if strict else (value < 0):
                    raise ConfigError(f"{section}.{key} must be positive",
                                      lines.get((section, key)))

    positive("grid", ("nodes", "radius"))
    positive("initial", ("n1", "T1", "n2", "T2", "cells", "length"))
    positive("initial", ("amplitude",), strict=False)
    positive("solver", ("dt", "steps"))
    positive("output", ("cadence",))
    positive("mhd", ("cells", "length", "cfl", "steps", "left_n", "left_p", "right_n",
                     "right_p"))
    sol = sections.get("solver", {})
    if sol.get("order", 1) not in (1, 2):
        raise ConfigError("solver.order must be 1 or 2", lines.get(("solver", "order")))
    if not 0 <= sol.get("seed", 0) <= SEED_MAX:
        raise ConfigError("solver.seed must be a 64-bit unsigned integer",
                          lines.get(("solver", "seed")))
    g = sections.get("grid", {})
    if ("lower" in g) != ("upper" in g):
        raise ConfigError("grid.lower and grid.upper go together", lines.get(("grid", None)))
    if "lower" in g and not np.all(np.array(g["upper"]) > np.array(g["lower"])):
        raise ConfigError("grid.upper must exceed grid.lower", lines.get(("grid", "upper")))
    prof = sections.get("initial", {}).get("profile", "uniform")
    if prof != "uniform" and sections.get("initial", {}).get("amplitude", 0.1) >= 1:
        raise ConfigError("initial.amplitude must be below 1 to keep n, T positive",
                          lines.get(("initial", "amplitude")))


SCENARIOS = ("hamel_relax", "transport_periodic", "mhd_riemann")


def bundled_scenario(name: str) -> str:
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem not in SCENARIOS:
        raise FileNotFoundError(f"no scenario {name!r}; bundled: {', '.join(SCENARIOS)}")
    return resources.files("bgkmix").joinpath("scenarios", f"{stem}.cfg").read_text("utf-8")


def load_config(path: str | Path) -> tuple[ScenarioConfig, str]:
    """Read a file, falling back to a bundled scenario name; returns config and raw text."""
    p = Path(path)
    if p.exists():
        text = p.read_text("utf-8")
    else:
        text = bundled_scenario(p.name)
    return parse_config(text), text
