"""Command-line front end: build strategies, compose tables, run certifiers,
dump reports and sweeps.

Exit codes: 0 success (certify: pass), 1 certify fail, 2 configuration or
input-file error, 3 composition/enumeration error, 4 certify
precondition-violated.  Every error path prints a single line to stderr of
the form ``error: <category>: <message>``.

The environment variable ``PARASELF_THREADS`` caps internal parallelism
(default: hardware concurrency).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import bell, certify, strategies
from .bell import Scheme
from .errors import (
    ConfigError,
    EnumerationTooLarge,
    InvalidAngles,
    SchemeInputMismatch,
    SeeSawDidNotConverge,
    ShapeMismatch,
    TableFormatError,
    UnsupportedDimension,
    ZeroPrefixProbability,
)

EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_COMPOSITION = 3
EXIT_PRECONDITION = 4

_COMPOSITION_ERRORS = (
    SchemeInputMismatch,
    UnsupportedDimension,
    InvalidAngles,
    SeeSawDidNotConverge,
    ShapeMismatch,
    ZeroPrefixProbability,
)


def _die(code: int, category: str, message: str):
    click.echo(f"error: {category}: {message}", err=True)
    sys.exit(code)


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


def _json_text(data: dict) -> str:
    return json.dumps(data, indent=2) + "\n"


def _thread_cap() -> int:
    raw = os.environ.get("PARASELF_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError("PARASELF_THREADS", f"not an integer: {raw!r}") from None
    if value < 1:
        raise ConfigError("PARASELF_THREADS", "must be >= 1")
    return value


def _load_expression(spec: str) -> bell.BellExpression:
    """Resolve --bell: a built-in name or a path to an expression JSON."""
    try:
        return bell.builtin_expression(spec)
    except KeyError:
        pass
    path = Path(spec)
    if not path.exists():
        raise ConfigError("--bell", f"{spec!r} is neither a built-in nor a file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise TableFormatError("", f"invalid JSON in {spec}: {exc}") from None
    return bell.expression_from_json_dict(data)


def _load_table(path: str) -> tuple:
    p = Path(path)
    if not p.exists():
        raise ConfigError("--table", f"file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise TableFormatError("", f"invalid JSON: {exc}") from None
    table = bell.table_from_json_dict(data)
    provenance = data.get("provenance", {}) if isinstance(data, dict) else {}
    return table, provenance


def _parse_strategy_specs(specs, copies, seed):
    """Turn --strategy/--copies into either a list of single-copy strategies
    or an adversary table spec.  Returns (strategies, adversary, entries)
    where ``entries`` lists the effective per-copy presets for provenance."""
    parsed = []
    for spec in specs:
        try:
            parsed.append(strategies.parse_strategy_spec(spec))
        except (KeyError, ValueError) as exc:
            raise ConfigError("--strategy", str(exc)) from None
    adversaries = [name for name, _ in parsed if name in strategies.ADVERSARY_PRESETS]
    if adversaries:
        if len(parsed) != 1:
            raise ConfigError("--strategy", "adversary presets cannot be combined")
        name, args = parsed[0]
        if args and copies is not None and int(args[0]) != copies:
            raise ConfigError("--copies", "conflicts with the adversary's n parameter")
        n = int(args[0]) if args else copies
        if n is None:
            raise ConfigError("--copies", f"{name} needs a copy count")
        return None, (name, n), [{"name": name, "params": [n]}]
    built = []
    for name, args in parsed:
        try:
            built.append(strategies.build_preset_strategy(name, args, seed=seed))
        except KeyError as exc:
            raise ConfigError("--strategy", str(exc.args[0])) from None
        except ValueError as exc:
            raise ConfigError("--strategy", str(exc)) from None
    if len(built) == 1 and copies is not None:
        if copies < 1:
            raise ConfigError("--copies", "must be >= 1")
        built = built * copies
        parsed = parsed * copies
    elif copies is not None and copies != len(built):
        raise ConfigError("--copies", f"{copies} conflicts with {len(built)} strategies")
    entries = [{"name": name, "params": list(args)} for name, args in parsed]
    return built, None, entries


@click.group()
def main():
    """Simulate parallel Bell experiments and certify correlation tables."""


@main.command()
@click.option("--strategy", "strategy_specs", multiple=True, required=True,
              help="Strategy preset, repeatable: chsh, tilted-chsh(a), "
                   "fullstats(g,d), adversary-copy(n), adversary-shared-randomness(n).")
@click.option("--copies", type=int, default=None, help="Number of copies.")
@click.option("--scheme", type=click.Choice(["broadcast", "percopy"]),
              default="broadcast", show_default=True)
@click.option("--noise", type=float, default=None,
              help="Visibility of white noise applied to every copy.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="Output path (default: stdout).")
def simulate(strategy_specs, copies, scheme, noise, seed, out):
    """Compose copies into a joint correlation table and write it as JSON."""
    try:
        built, adversary, entries = _parse_strategy_specs(strategy_specs, copies, seed)
        if noise is not None and not 0.0 <= noise <= 1.0:
            raise ConfigError("--noise", f"visibility {noise} outside [0, 1]")
    except ConfigError as exc:
        _die(EXIT_CONFIG, "config", str(exc))
    except _COMPOSITION_ERRORS as exc:
        _die(EXIT_COMPOSITION, "composition", str(exc))
    try:
        if adversary is not None:
            if noise is not None:
                _die(EXIT_CONFIG, "config", "--noise: not applicable to adversary tables")
            if scheme != "broadcast":
                _die(EXIT_CONFIG, "config", "--scheme: adversary tables are broadcast-shaped")
            name, n = adversary
            table = strategies.build_preset_table(name, n)
        else:
            if noise is not None:
                built = [strategies.apply_isotropic_noise(s, noise) for s in built]
            table = strategies.compose(built, Scheme(scheme))
    except _COMPOSITION_ERRORS as exc:
        _die(EXIT_COMPOSITION, "composition", str(exc))
    prov = {"strategies": entries, "noise": noise, "seed": seed}
    _emit(_json_text(bell.table_to_json_dict(table, prov)), out)


def _resolve_expressions(bell_specs, n: int):
    if not bell_specs:
        raise ConfigError("--bell", "at least one expression is required")
    exprs = [_load_expression(s) for s in bell_specs]
    if len(exprs) == 1 and n > 1:
        exprs = exprs * n
    if len(exprs) != n:
        raise ConfigError("--bell", f"{len(exprs)} expressions for {n} copies")
    return exprs


def _resolve_targets(beta_specs, exprs, provenance, n: int, seed: int):
    """--beta values, or the single token 'oracle' to resolve each target
    from the fixed measurements of the strategies recorded in the table's
    provenance."""
    if len(beta_specs) == 1 and beta_specs[0] == "oracle":
        entries = provenance.get("strategies") if isinstance(provenance, dict) else None
        if not entries or len(entries) != n:
            raise ConfigError(
                "--beta", "oracle resolution needs table provenance with one "
                          "strategy per copy")
        targets = []
        for k, entry in enumerate(entries):
            try:
                s = strategies.build_preset_strategy(
                    entry["name"], entry.get("params", ()), seed=seed)
            except (KeyError, TypeError, ValueError):
                raise ConfigError(
                    "--beta", f"cannot rebuild strategy {k + 1} from provenance") from None
            targets.append(bell.quantum_value_fixed_measurements(exprs[k], s).value)
        return targets
    try:
        targets = [float(b) for b in beta_specs]
    except ValueError:
        raise ConfigError("--beta", "values must be numbers or the token 'oracle'") from None
    if len(targets) == 1 and n > 1:
        targets = targets * n
    if len(targets) != n:
        raise ConfigError("--beta", f"{len(targets)} targets for {n} copies")
    return targets


@main.command("certify")
@click.option("--table", "table_path", required=True, help="Table JSON to certify.")
@click.option("--protocol", type=click.Choice(
    ["theorem1", "theorem2", "theorem3", "theorem4"]), required=True)
@click.option("--bell", "bell_specs", multiple=True,
              help="Expression name or JSON path (repeatable for per-copy lists).")
@click.option("--beta", "beta_specs", multiple=True,
              help="Target value(s), or 'oracle' to resolve from provenance.")
@click.option("--reference", "reference_path", default=None,
              help="Single-copy reference table (theorem2 only).")
@click.option("--tol", type=float, default=certify.DEFAULT_TOL, show_default=True,
              help="Numerical slack (not noise robustness).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="Report path (default: stdout).")
def certify_cmd(table_path, protocol, bell_specs, beta_specs, reference_path,
                tol, seed, out):
    """Certify a table file; the exit code reflects the verdict (0 pass,
    1 fail, 4 precondition-violated)."""
    try:
        table, provenance = _load_table(table_path)
        if protocol == "theorem2":
            if reference_path is None:
                raise ConfigError("--reference", "required for theorem2")
            if bell_specs or beta_specs:
                raise ConfigError("--bell", "theorem2 compares against --reference, "
                                            "not expressions/targets")
            reference, _ = _load_table(reference_path)
            spec = certify.ProtocolSpec("theorem2", (), (), reference, tol)
        else:
            if reference_path is not None:
                raise ConfigError("--reference", f"not used by {protocol}")
            exprs = _resolve_expressions(bell_specs, table.n_copies)
            targets = _resolve_targets(beta_specs, exprs, provenance,
                                       table.n_copies, seed)
            spec = certify.ProtocolSpec(protocol, tuple(exprs), tuple(targets),
                                        None, tol)
    except TableFormatError as exc:
        _die(EXIT_CONFIG, "input", str(exc))
    except ConfigError as exc:
        _die(EXIT_CONFIG, "config", str(exc))
    try:
        report = spec.run(table)
    except _COMPOSITION_ERRORS as exc:
        _die(EXIT_COMPOSITION, "composition", str(exc))
    _emit(_json_text(report.to_json_dict()), out)
    if report.verdict == certify.VERDICT_PASS:
        sys.exit(0)
    if report.verdict == certify.VERDICT_FAIL:
        sys.exit(EXIT_FAIL)
    sys.exit(EXIT_PRECONDITION)


@main.command()
@click.option("--bell", "bell_spec", required=True,
              help="Expression name or JSON path.")
@click.option("--strategy", "strategy_spec", default=None,
              help="Strategy preset supplying fixed measurements for the "
                   "quantum value (defaults to the matching reference for "
                   "built-in expressions).")
@click.option("--witness", is_flag=True, help="Serialize the optimizers as JSON.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="Optional JSON output path.")
def bounds(bell_spec, strategy_spec, witness, seed, out):
    """Print the classical bound and, when measurements are available, the
    fixed-measurement quantum value (both at 10 significant digits)."""
    try:
        expr = _load_expression(bell_spec)
    except (ConfigError, TableFormatError) as exc:
        _die(EXIT_CONFIG, "config", str(exc))
    try:
        classical = bell.classical_bound(expr)
    except EnumerationTooLarge as exc:
        _die(EXIT_COMPOSITION, "enumeration", str(exc))
    strategy = None
    try:
        if strategy_spec is not None:
            name, args = strategies.parse_strategy_spec(strategy_spec)
            strategy = strategies.build_preset_strategy(name, args, seed=seed)
        elif bell_spec in ("chsh", "chsh-game"):
            strategy = strategies.chsh_reference()
        elif bell_spec.startswith("tilted-chsh("):
            alpha = float(bell_spec[len("tilted-chsh("):-1])
            strategy = strategies.tilted_chsh_reference(alpha, expr, seed=seed)
    except (KeyError, ValueError) as exc:
        _die(EXIT_CONFIG, "config", str(exc))
    except _COMPOSITION_ERRORS as exc:
        _die(EXIT_COMPOSITION, "composition", str(exc))
    quantum = None
    if strategy is not None:
        quantum = bell.quantum_value_fixed_measurements(expr, strategy)

    click.echo(f"classical {classical.value:.10g}")
    if quantum is not None:
        click.echo(f"quantum {quantum.value:.10g}")
    if witness:
        payload = {"classical": classical.witness}
        if quantum is not None:
            payload["quantum"] = quantum.witness
        click.echo(json.dumps(payload, indent=2))
    if out is not None:
        payload = {"classical": {"value": classical.value, "witness": classical.witness}}
        if quantum is not None:
            payload["quantum"] = {"value": quantum.value, "witness": quantum.witness}
        _emit(_json_text(payload), out)


def _parse_nus(text: str) -> list:
    """Comma list ('0,0.5,1') or range syntax 'start:stop:step'."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("--nus", f"range syntax is start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(v) for v in parts)
        except ValueError:
            raise ConfigError("--nus", f"non-numeric range bound in {text!r}") from None
        if step <= 0:
            raise ConfigError("--nus", "range step must be positive")
        values = []
        k = 0
        while True:
            v = start + k * step
            if v > stop + 1e-12:
                break
            values.append(min(v, stop))
            k += 1
        if not values:
            raise ConfigError("--nus", "empty range")
        return values
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError("--nus", f"non-numeric entry in {text!r}") from None
    if not values:
        raise ConfigError("--nus", "no visibilities given")
    return values


@main.command()
@click.option("--strategy", "strategy_spec", default="chsh", show_default=True,
              help="Single-copy strategy preset to sweep.")
@click.option("--copies", type=int, required=True)
@click.option("--bell", "bell_spec", default="chsh", show_default=True)
@click.option("--nus", required=True,
              help="Visibilities: comma list or start:stop:step range.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="CSV path (default: stdout).")
def sweep(strategy_spec, copies, bell_spec, nus, seed, out):
    """Sweep the white-noise visibility and tabulate all per-copy values as
    CSV (12 significant digits)."""
    try:
        values = _parse_nus(nus)
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ConfigError("--nus", "visibilities must lie in [0, 1]")
        expr = _load_expression(bell_spec)
        name, args = strategies.parse_strategy_spec(strategy_spec)
        if name in strategies.ADVERSARY_PRESETS:
            raise ConfigError("--strategy", "sweep needs a single-copy strategy")
        strategy = strategies.build_preset_strategy(name, args, seed=seed)
        workers = _thread_cap()
    except (ConfigError, TableFormatError) as exc:
        _die(EXIT_CONFIG, "config", str(exc))
    except _COMPOSITION_ERRORS as exc:
        _die(EXIT_COMPOSITION, "composition", str(exc))
    except (KeyError, ValueError) as exc:
        _die(EXIT_CONFIG, "config", str(exc))
    try:
        rows = certify.sweep_noise(strategy, copies, expr, values, workers=workers)
    except _COMPOSITION_ERRORS as exc:
        _die(EXIT_COMPOSITION, "composition", str(exc))
    except ValueError as exc:
        _die(EXIT_CONFIG, "config", str(exc))
    lines = ["nu," + ",".join(f"J{i}" for i in range(1, copies + 1))]
    for r in rows:
        lines.append(",".join([f"{r['nu']:.12g}"] +
                              [f"{v:.12g}" for v in r["j_values"]]))
    _emit("\n".join(lines) + "\n", out)


if __name__ == "__main__":
    main()
