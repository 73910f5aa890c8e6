"""Command-line driver: ``almg <command> [--config FILE] [flags]``.

Commands: spectrum, quench, ldos, echo, otoc, diagram, critical.
Exit codes: 0 success, 1 ``--verify`` mismatch, 2 configuration error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError

from almg import __version__
from almg.echo import EchoSpec, echo_averages, loschmidt_echo
from almg.errors import InvalidInput, NumericError, UnreachableQuench
from almg.model import EVEN, ModelParams, SpinOperator, parity_name, parse_parity
from almg.otoc import EigenbasisPair, OtocRequest, squared_commutator, steady_state_otoc, steady_state_profile
from almg.output import load_manifest, sha256, write_columns, write_manifest
from almg.quench import (
    QuenchSpec,
    broadened_ldos,
    critical_xi_from_ground,
    critical_xi_from_highest,
    quench_coefficients,
    survival_probability,
    tangent_data,
    time_grid,
)
from almg.spectra import SpectralData, StateSelector, cached_diagonalize

log = logging.getLogger("almg")

COMMANDS = ("spectrum", "quench", "ldos", "echo", "otoc", "diagram", "critical")
OUTPUT_ENV = "ALMG_OUTPUT_DIR"


def _optional_float(text: str) -> Optional[float]:
    return None if str(text).strip().lower() in ("", "none") else float(text)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Option:
    convert: Callable
    default: object
    commands: Tuple[str, ...]
    help: str
    flag: str = ""


_TIME = ("quench", "echo", "otoc")

OPTIONS: Dict[str, Option] = {
    "N": Option(int, 300, COMMANDS, "number of sites (even)"),
    "xi": Option(float, 0.5, ("spectrum", "echo", "otoc"), "control parameter xi in [0, 1]"),
    "alpha": Option(float, -0.6, COMMANDS, "anharmonicity alpha"),
    "xi1": Option(float, 0.6, ("quench", "ldos", "critical"), "initial xi of the quench"),
    "xi2": Option(float, 0.3, ("quench", "ldos"), "final xi of the quench"),
    "from": Option(str, "ground", ("quench", "ldos", "critical"), "initial state: ground, highest-even, highest, even:j"),
    "eps0": Option(_optional_float, None, ("critical",), "flat critical line for --from highest-even (default 1 + alpha)"),
    "delta": Option(float, 0.01, ("echo",), "perturbation xi -> xi + delta"),
    "states": Option(str, "even:0", ("echo", "otoc"), "state list, e.g. 'even:0,20,48' or 'near-eps:0.4'"),
    "W": Option(str, "sp", ("otoc", "diagram"), "OTOC operator W (sz, sp, sm, sx, sy, sx2, n, nsq)"),
    "V": Option(str, "sm", ("otoc", "diagram"), "OTOC operator V"),
    "normalized": Option(_bool, True, ("otoc", "diagram"), "divide W and V by S"),
    "horizon": Option(float, 1e4, ("otoc",), "steady-state averaging horizon T"),
    "samples": Option(int, 100_000, ("otoc",), "steady-state samples on [0, T)"),
    "steady": Option(str, "numeric", ("otoc",), "steady-state method: numeric or analytic"),
    "t_max": Option(float, 50.0, _TIME, "end of the time grid"),
    "n_points": Option(int, 2000, _TIME, "points on the time grid"),
    "sigma": Option(_optional_float, None, ("quench", "ldos"), "Gaussian broadening of the LDOS in E/N units"),
    "xi_grid": Option(str, "0:1:0.01", ("diagram",), "xi grid as start:stop:step (stop inclusive)"),
    "workers": Option(int, 1, ("diagram",), "worker processes for the xi grid"),
    "output_dir": Option(str, None, COMMANDS, f"output directory (default ${OUTPUT_ENV} or ./almg_out)"),
    "cache_dir": Option(str, None, COMMANDS, "directory for cached spectra"),
}


@dataclass
class RunConfig:
    command: str
    model: ModelParams
    values: Dict[str, object]
    output_dir: Path
    sources: Dict[str, str] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def grid(self) -> np.ndarray:
        return time_grid(self.values["t_max"], self.values["n_points"])

    def echo(self) -> dict:
        out = {"command": self.command}
        out.update({k: v for k, v in self.values.items() if k not in ("output_dir", "cache_dir")})
        return out


# ---------------------------------------------------------------------------
# parsing


def read_config_file(path) -> List[Tuple[int, str, str]]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    entries = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        entries.append((lineno, key.replace("-", "_"), value.strip("\"'")))
    return entries


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="almg", description=__doc__.splitlines()[0])
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value config file; flags override it")
    parser.add_argument("--verify", action="store_true", help="recompute and compare against manifest.json")
    parser.add_argument("-v", "--verbose", action="store_true")
    for name, opt in OPTIONS.items():
        flag = "--" + name.replace("_", "-")
        kwargs = dict(dest=name, default=argparse.SUPPRESS, help=opt.help)
        if name == "states":
            kwargs["action"] = "append"
        parser.add_argument(flag, **kwargs)
    return parser


def _convert(name: str, raw, where: str):
    opt = OPTIONS[name]
    try:
        return opt.convert(raw)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{where}: bad value {raw!r} for {name}: {exc}") from exc


def parse_config(argv: Optional[Sequence[str]] = None, env: Optional[dict] = None) -> Tuple[RunConfig, argparse.Namespace]:
    env = os.environ if env is None else env
    parser = build_parser()
    ns = parser.parse_args(argv)
    raw: Dict[str, object] = {}
    sources: Dict[str, str] = {}

    file_command = None
    if ns.config:
        for lineno, key, value in read_config_file(ns.config):
            where = f"{ns.config}:{lineno}"
            if key == "command":
                file_command = value
                continue
            if key not in OPTIONS:
                raise InvalidInput(f"{where}: unknown key {key!r}")
            raw[key] = _convert(key, value, where)
            sources[key] = where

    command = ns.command or file_command
    if command is None:
        raise InvalidInput("no command given (positional argument or 'command =' in the config file)")
    if command not in COMMANDS:
        raise InvalidInput(f"{ns.config}: unknown command {command!r}")
    if ns.command and file_command and ns.command != file_command:
        raise InvalidInput(f"command {ns.command!r} conflicts with 'command = {file_command}' in {ns.config}")

    for name in OPTIONS:
        if name in vars(ns):
            value = getattr(ns, name)
            if name == "states":
                value = ";".join(value)
            flag = "--" + name.replace("_", "-")
            raw[name] = _convert(name, value, flag)
            sources[name] = flag

    for name, where in sources.items():
        if command not in OPTIONS[name].commands:
            raise InvalidInput(f"{where}: option {name!r} does not apply to command {command!r}")

    values = {name: opt.default for name, opt in OPTIONS.items() if command in opt.commands}
    values.update(raw)
    if values.get("output_dir") is None:
        values["output_dir"] = env.get(OUTPUT_ENV) or "almg_out"
    config = _validate(command, values, sources)
    return config, ns


def _where(sources, name):
    return sources.get(name, f"default {name}")


def _validate(command: str, values: dict, sources: dict) -> RunConfig:
    def check(cond, name, msg):
        if not cond:
            raise InvalidInput(f"{_where(sources, name)}: {name}={values[name]!r} {msg}")

    check(values["N"] >= 2 and values["N"] % 2 == 0, "N", "must be an even integer >= 2")
    for name in ("xi", "xi1", "xi2"):
        if name in values:
            check(0.0 <= values[name] <= 1.0, name, "outside [0, 1]")
    check(np.isfinite(values["alpha"]), "alpha", "must be finite")
    if "t_max" in values:
        check(values["t_max"] > 0, "t_max", "must be positive")
        check(values["n_points"] >= 1, "n_points", "must be >= 1")
    if command == "echo":
        check(0.0 <= values["xi"] + values["delta"] <= 1.0, "delta", "moves xi + delta outside [0, 1]")
    if command == "otoc":
        check(values["horizon"] > 0, "horizon", "must be positive")
        check(values["samples"] >= 1000, "samples", "must be >= 1000")
        check(values["steady"] in ("numeric", "analytic"), "steady", "must be numeric or analytic")
    if "W" in values:
        for name in ("W", "V"):
            try:
                SpinOperator.parse(values[name])
            except InvalidInput as exc:
                raise InvalidInput(f"{_where(sources, name)}: {exc}") from None
    if "from" in values:
        try:
            StateSelector.parse(values["from"])
        except InvalidInput as exc:
            raise InvalidInput(f"{_where(sources, 'from')}: {exc}") from None
    if values.get("sigma") is not None:
        check(values["sigma"] > 0, "sigma", "must be positive")
    if "states" in values:
        try:
            parse_states(values["states"])
        except InvalidInput as exc:
            raise InvalidInput(f"{_where(sources, 'states')}: {exc}") from None
    if command == "diagram":
        check(values["workers"] >= 1, "workers", "must be >= 1")
        try:
            parse_xi_grid(values["xi_grid"])
        except InvalidInput as exc:
            raise InvalidInput(f"{_where(sources, 'xi_grid')}: {exc}") from None

    xi = values.get("xi", values.get("xi1", 0.0))
    model = ModelParams(values["N"], xi, values["alpha"])
    return RunConfig(command, model, values, Path(values["output_dir"]), dict(sources))


def parse_xi_grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise InvalidInput(f"xi grid must be start:stop:step, got {text!r}") from exc
    if step <= 0 or stop < start or start < 0 or stop > 1:
        raise InvalidInput(f"xi grid {text!r} must satisfy 0 <= start <= stop <= 1 and step > 0")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def parse_states(text: str) -> List[tuple]:
    """``even:0,20,48``, ``odd:3`` and ``near-eps:0.4[:odd]`` groups separated by ';' or spaces."""
    out = []
    for group in text.replace(";", " ").split():
        head, _, rest = group.partition(":")
        head = head.lower()
        if not rest:
            raise InvalidInput(f"bad state group {group!r}")
        if head in ("even", "odd"):
            try:
                out.extend(("index", parse_parity(head), int(j)) for j in rest.split(",") if j)
            except ValueError as exc:
                raise InvalidInput(f"bad index in {group!r}") from exc
        elif head == "near-eps":
            value, _, parity = rest.partition(":")
            try:
                out.append(("near", parse_parity(parity or "even"), float(value)))
            except ValueError as exc:
                raise InvalidInput(f"bad energy in {group!r}") from exc
        else:
            raise InvalidInput(f"unknown state group {group!r}")
    if not out:
        raise InvalidInput("empty state list")
    return out


def resolve_states(text: str, spec: SpectralData) -> List[Tuple[int, int]]:
    """(parity, j) pairs; ``near-eps`` picks the state whose E/N is closest."""
    resolved = []
    for kind, parity, value in parse_states(text):
        if kind == "near":
            j = spec.nearest(value, parity)
        else:
            j = value
            spec.global_index(parity, j)
        if (parity, j) not in resolved:
            resolved.append((parity, j))
    return resolved


# ---------------------------------------------------------------------------
# commands


def _diag(config: RunConfig, params: ModelParams) -> SpectralData:
    return cached_diagonalize(params, config.values.get("cache_dir"))


def _tag(parity: int, j: int) -> str:
    return f"{parity_name(parity)}_{j}"


def cmd_spectrum(config: RunConfig, out: Path) -> List[Path]:
    spec = _diag(config, config.model)
    path = write_columns(
        out / "spectrum.csv",
        {
            "index": np.arange(spec.dim),
            "parity": spec.parities,
            "j": spec.sector_index,
            "E": spec.energies,
            "eps": spec.eps,
            "e_per_site": spec.energy_per_site,
        },
    )
    if spec.dim <= 12:
        print("energies:", " ".join(format(e, ".12g") for e in spec.energies))
    else:
        print(f"E_gs = {spec.gs_energy:.12g}, E_max = {spec.energies[-1]:.12g}, dim = {spec.dim}")
    return [path]


def _ldos(config: RunConfig):
    q = QuenchSpec(config.model.N, config["alpha"], config["xi1"], config["xi2"], StateSelector.parse(config["from"]))
    first = _diag(config, q.params1)
    final = _diag(config, q.params2)
    return quench_coefficients(q, first, final)


def _write_ldos(config: RunConfig, out: Path, ldos) -> List[Path]:
    paths = [
        write_columns(
            out / "ldos.csv",
            {
                "E_j": ldos.energies,
                "eps_j": ldos.eps,
                "weight": ldos.weights,
                "parity": ldos.parities,
                "e_per_site": ldos.energy_per_site,
            },
        )
    ]
    if config.values.get("sigma"):
        e = ldos.energy_per_site
        grid = np.linspace(e.min(), e.max(), 2000)
        paths.append(
            write_columns(out / "ldos_broadened.csv", {"e_per_site": grid, "density": broadened_ldos(ldos, grid, config["sigma"])})
        )
    return paths


def cmd_quench(config: RunConfig, out: Path) -> List[Path]:
    ldos = _ldos(config)
    series = survival_probability(ldos, config.grid)
    paths = [write_columns(out / "survival.csv", {"t": series.times, "F": series.values})]
    print(f"<F> over grid = {series.values.mean():.6g}")
    return paths + _write_ldos(config, out, ldos)


def cmd_ldos(config: RunConfig, out: Path) -> List[Path]:
    return _write_ldos(config, out, _ldos(config))


def cmd_echo(config: RunConfig, out: Path) -> List[Path]:
    params = config.model
    probe = EchoSpec(params, config["delta"])
    unpert = _diag(config, params)
    pert = _diag(config, probe.perturbed)
    paths = []
    states = resolve_states(config["states"], unpert)
    for parity, j in states:
        series = loschmidt_echo(EchoSpec(params, config["delta"], (parity, j)), config.grid, unpert, pert)
        paths.append(write_columns(out / f"echo_{_tag(parity, j)}.csv", {"t": series.times, "M": series.values}))
    cols: Dict[str, list] = {k: [] for k in ("j", "parity", "E_j", "eps_j", "M_bar", "e_per_site", "degenerate")}
    for parity in sorted({p for p, _ in states}, reverse=True):
        avg = echo_averages(params, config["delta"], parity)
        cols["j"].extend(avg.j)
        cols["parity"].extend([parity] * len(avg.j))
        cols["E_j"].extend(avg.energies)
        cols["eps_j"].extend(avg.eps)
        cols["M_bar"].extend(avg.m_bar)
        cols["e_per_site"].extend(avg.energy_per_site)
        cols["degenerate"].extend(avg.degenerate)
    paths.append(write_columns(out / "echo_avg.csv", cols))
    return paths


def cmd_otoc(config: RunConfig, out: Path) -> List[Path]:
    spec = _diag(config, config.model)
    pair = EigenbasisPair(spec, config["W"], config["V"], config["normalized"])
    states = resolve_states(config["states"], spec)
    paths = []
    steady_rows: Dict[str, list] = {k: [] for k in ("parity", "index", "E", "eps", "F_bar", "e_per_site")}
    for parity, j in states:
        req = OtocRequest(config.model, (parity, j), config["W"], config["V"], config.grid, config["normalized"])
        series = squared_commutator(req, pair=pair)
        paths.append(
            write_columns(
                out / f"otoc_{_tag(parity, j)}.csv",
                {"t": series.times, "F": series.f_values, "C": series.c_values, "A": series.a_values},
            )
        )
        f_bar = steady_state_otoc(req, config["horizon"], config["samples"], config["steady"], pair=pair)
        k = spec.global_index(parity, j)
        for key, val in zip(steady_rows, (parity, j, spec.energies[k], spec.eps[k], f_bar, spec.energy_per_site[k])):
            steady_rows[key].append(val)
        print(f"{_tag(parity, j)}: E/N = {spec.energy_per_site[k]:.6f}, F_bar = {f_bar:.6g}")
    paths.append(write_columns(out / "otoc_steady.csv", steady_rows))
    return paths


def _diagram_column(args) -> dict:
    N, xi, alpha, W, V, normalized = args
    prof = steady_state_profile(ModelParams(N, xi, alpha), W, V, EVEN, normalized)
    return {
        "xi": np.full(len(prof.j), xi),
        "index": prof.j,
        "E": prof.energies,
        "eps": prof.eps,
        "parity": np.full(len(prof.j), EVEN),
        "F_bar": prof.f_bar,
        "e_per_site": prof.energy_per_site,
    }


def cmd_diagram(config: RunConfig, out: Path) -> List[Path]:
    grid = parse_xi_grid(config["xi_grid"])
    jobs = [(config.model.N, float(xi), config["alpha"], config["W"], config["V"], config["normalized"]) for xi in grid]
    if config["workers"] > 1:
        with ProcessPoolExecutor(max_workers=config["workers"]) as pool:
            columns = list(pool.map(_diagram_column, jobs))
    else:
        columns = [_diagram_column(job) for job in jobs]
    merged = {key: np.concatenate([c[key] for c in columns]) for key in columns[0]}
    print(f"diagram: {len(grid)} xi values x {len(columns[0]['index'])} even states")
    return [write_columns(out / "diagram.csv", merged)]


def cmd_critical(config: RunConfig, out: Path) -> List[Path]:
    sel = StateSelector.parse(config["from"])
    params = ModelParams(config.model.N, config["xi1"], config["alpha"])
    spec = _diag(config, params)
    slope, eps1 = tangent_data(params, sel, spec)
    if sel.mode == "ground":
        eps0 = float("nan")
        xi_c = critical_xi_from_ground(config["alpha"], config["xi1"], params.N, spec)
    else:
        eps0 = config["eps0"] if config["eps0"] is not None else 1.0 + config["alpha"]
        xi_c = critical_xi_from_highest(config["alpha"], config["xi1"], params.N, eps0, sel, spec)
    print(f"xi_c = {xi_c:.6f}  (slope {slope:.6f}, eps(xi1) {eps1:.6f})")
    return [
        write_columns(
            out / "critical.csv",
            {
                "alpha": [config["alpha"]],
                "xi1": [config["xi1"]],
                "from": [str(sel)],
                "eps0": [eps0],
                "slope": [slope],
                "eps_initial": [eps1],
                "xi_c": [xi_c],
            },
        )
    ]


HANDLERS = {
    "spectrum": cmd_spectrum,
    "quench": cmd_quench,
    "ldos": cmd_ldos,
    "echo": cmd_echo,
    "otoc": cmd_otoc,
    "diagram": cmd_diagram,
    "critical": cmd_critical,
}


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


def execute(config: RunConfig, out: Path) -> List[Path]:
    out.mkdir(parents=True, exist_ok=True)
    try:
        return HANDLERS[config.command](config, out)
    except InvalidInput:
        raise
    except (NumericError, UnreachableQuench, LinAlgError, FloatingPointError) as exc:
        raise StageError(config.command, exc) from exc


def run(config: RunConfig, verify: bool = False) -> int:
    out = config.output_dir
    if verify:
        manifest_path = out / "manifest.json"
        if not manifest_path.exists():
            raise InvalidInput(f"--verify needs an existing {manifest_path}")
        expected = load_manifest(manifest_path)["outputs"]
        with tempfile.TemporaryDirectory() as tmp:
            paths = execute(config, Path(tmp))
            actual = {p.name: sha256(p) for p in paths}
        bad = sorted(k for k in set(expected) | set(actual) if expected.get(k) != actual.get(k))
        for name in bad:
            print(f"MISMATCH {name}")
        print("verify:", "ok" if not bad else f"{len(bad)} file(s) differ")
        return 0 if not bad else 1

    t0 = time.perf_counter()
    paths = execute(config, out)
    write_manifest(out / "manifest.json", config.echo(), paths, time.perf_counter() - t0, __version__)
    print(f"wrote {len(paths)} file(s) to {out}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config, ns = parse_config(argv)
    except InvalidInput as exc:
        print(f"almg: config error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING)
    try:
        return run(config, verify=ns.verify)
    except InvalidInput as exc:
        print(f"almg: config error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"almg: numeric error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
