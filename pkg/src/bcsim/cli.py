"""Command-line entry point: sim, attack, analyze, and sweep subcommands.

Every command is a pure function of (config, inputs, seed); data outputs
are byte-identical across reruns and each output file gets a companion
run manifest recording the exact configuration.
"""

import csv
import io
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import click
import yaml

from . import __version__
from .analysis import ModelError, monte_carlo_single_set, p_avg
from .attacks import run_aes_attack, run_single_set_attack
from .core import CacheError, CacheGeometry
from .simulator import (
    DEFAULT_SEED,
    MODE_BACKUP,
    RESIZE_DYNAMIC,
    RESIZE_FIXED,
    ConfigError,
    SimConfig,
    Simulator,
)
from .trace import TraceError, parse_trace, run_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_INTERNAL = 4

_GEOMETRY_KEYS = {"line_bytes", "sets", "ways", "hit_cycles"}
_TOP_KEYS = {"mode", "seed", "l1d", "l2", "memory_penalty_cycles", "backup", "resize"}
_BACKUP_KEYS = {"capacity_lines", "min_lines", "max_lines"}
_RESIZE_KEYS = {"mode", "threshold"}


class InputDataError(Exception):
    """Unreadable or malformed input file."""


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


def _geometry(mapping: dict, where: str, defaults: CacheGeometry) -> CacheGeometry:
    _reject_unknown(mapping, _GEOMETRY_KEYS, where)
    return CacheGeometry(
        line_bytes=mapping.get("line_bytes", defaults.line_bytes),
        num_sets=mapping.get("sets", defaults.num_sets),
        ways=mapping.get("ways", defaults.ways),
        hit_cycles=mapping.get("hit_cycles", defaults.hit_cycles),
    )


def load_config(path: str | None, seed_override: int | None = None) -> SimConfig:
    """Build a SimConfig from a YAML file; unknown keys are hard errors.

    Without a file the defaults reproduce the defended 12-16KB system.
    """
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputDataError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    _reject_unknown(data, _TOP_KEYS, "config")
    base = SimConfig()
    backup = data.get("backup", {})
    _reject_unknown(backup, _BACKUP_KEYS, "backup")
    resize = data.get("resize", {})
    _reject_unknown(resize, _RESIZE_KEYS, "resize")
    seed = seed_override if seed_override is not None else data.get("seed", DEFAULT_SEED)
    try:
        return SimConfig(
            mode=data.get("mode", base.mode),
            l1d=_geometry(data.get("l1d", {}), "l1d", base.l1d),
            l2=_geometry(data.get("l2", {}), "l2", base.l2),
            backup_capacity=backup.get("capacity_lines", base.backup_capacity),
            backup_min=backup.get("min_lines", base.backup_min),
            backup_max=backup.get("max_lines", base.backup_max),
            memory_penalty_cycles=data.get("memory_penalty_cycles", base.memory_penalty_cycles),
            seed=seed,
            resize_mode=resize.get("mode", RESIZE_DYNAMIC),
            fixed_threshold=resize.get("threshold"),
        )
    except CacheError as exc:
        raise ConfigError(str(exc)) from exc


def _write_manifest(out_path: Path, command: str, config: SimConfig,
                    outputs: list[str], started: float) -> None:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config": asdict(config),
        "seed": config.seed,
        "outputs": outputs,
        "wall_clock_seconds": round(time.time() - started, 3),
    }
    path = out_path.with_suffix(out_path.suffix + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n")


def _read_trace(path: str):
    try:
        with open(path) as fh:
            return parse_trace(fh)
    except OSError as exc:
        raise InputDataError(f"cannot read trace {path}: {exc}") from exc


@click.group()
@click.version_option(version=__version__)
def cli():
    """Cache-hierarchy simulator with an eviction-hiding backup cache."""


@cli.command("sim")
@click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file.")
@click.option("--trace", "trace_path", type=click.Path(), required=True, help="Trace file.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="Stats output file.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--format", "fmt", type=click.Choice(["text", "structured"]), default="text")
def cmd_sim(config_path, trace_path, out_path, seed, fmt):
    """Run a trace through the simulator and write aggregate statistics."""
    started = time.time()
    config = load_config(config_path, seed)
    records = _read_trace(trace_path)
    sim = Simulator(config)
    stats = run_trace(sim, records)
    out = Path(out_path)
    if fmt == "structured":
        body = json.dumps({"stats": stats.as_dict(), "state_digest": sim.state_digest()},
                          indent=2, sort_keys=True) + "\n"
    else:
        body = stats.as_text() + f"state_digest={sim.state_digest()}\n"
    out.write_text(body)
    _write_manifest(out, "sim", config, [str(out)], started)
    click.echo(f"wrote {out}")


@cli.command("attack")
@click.argument("scenario", type=click.Choice(["single_set", "aes"]))
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True, help="CSV output file.")
@click.option("--seed", type=int, default=None)
@click.option("--bits", type=int, default=100, help="single_set: number of secret bits.")
@click.option("--filler-kb", type=int, default=0, help="single_set: backup filler size in KB.")
@click.option("--samples", type=int, default=1000, help="aes: number of samples.")
@click.option("--key", "key_hex", default="000102030405060708090a0b0c0d0e0f",
              help="aes: 16-byte key as hex.")
def cmd_attack(scenario, config_path, out_path, seed, bits, filler_kb, samples, key_hex):
    """Run a Prime+Probe case study and write per-probe latencies as CSV."""
    started = time.time()
    config = load_config(config_path, seed)
    out = Path(out_path)
    if scenario == "single_set":
        if bits < 2:
            raise click.UsageError("--bits must be at least 2")
        secret = [0] * (bits // 2) + [1] * (bits - bits // 2)
        result = run_single_set_attack(config, secret, filler_bytes=filler_kb * 1024,
                                       seed=config.seed)
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial", "secret_bit", "probe_latency_cycles"])
            for i, (bit, lat) in enumerate(zip(result.secret_bits, result.probe_latencies)):
                writer.writerow([i, bit, lat])
        click.echo(f"accuracy={result.accuracy:.4f} degenerate={result.degenerate}")
    else:
        try:
            key = bytes.fromhex(key_hex)
        except ValueError as exc:
            raise click.UsageError(f"bad --key: {exc}") from exc
        if len(key) != 16:
            raise click.UsageError("--key must be 16 bytes of hex")
        result = run_aes_attack(config, samples, key, seed=config.seed)
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"set_{j}" for j in range(result.latencies.shape[1])])
            for row in result.latencies:
                writer.writerow([int(v) for v in row])
        means = result.latencies.mean(axis=0) if samples else None
        spread = float(means.max() - means.min()) if samples else 0.0
        click.echo(f"per_set_mean_latency_spread={spread:.2f}")
    _write_manifest(out, f"attack {scenario}", config, [str(out)], started)
    click.echo(f"wrote {out}")


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("-")
        return int(lo), int(hi)
    except ValueError as exc:
        raise click.UsageError(f"bad range {text!r}, expected MIN_KB-MAX_KB") from exc


@cli.command("analyze")
@click.option("--range", "ranges", multiple=True, default=("12-16", "8-16", "4-16"),
              help="Backup size range in KB, e.g. 12-16. Repeatable.")
@click.option("--line-bytes", type=int, default=64)
@click.option("--p", "p_bias", type=float, default=0.5, help="Guess bias on ambiguous observations.")
@click.option("--trials", type=int, default=10**6, help="Monte Carlo trials; 0 for closed form only.")
@click.option("--seed", type=int, default=DEFAULT_SEED)
@click.option("--out", "out_path", type=click.Path(), default=None, help="Optional CSV output file.")
@click.option("--format", "fmt", type=click.Choice(["text", "csv"]), default="text")
def cmd_analyze(ranges, line_bytes, p_bias, trials, seed, out_path, fmt):
    """Closed-form attacker success probabilities with a Monte Carlo check."""
    rows = []
    for r in ranges:
        lo_kb, hi_kb = _parse_range(r)
        b_min = lo_kb * 1024 // line_bytes
        b_max = hi_kb * 1024 // line_bytes
        try:
            closed = p_avg(b_min, b_max)
            if trials:
                mc = monte_carlo_single_set(b_min, b_max, p=p_bias, trials=trials, seed=seed)
                rows.append((r, closed, f"{mc.estimate:.6f}", f"{mc.stderr:.6f}", trials))
            else:
                rows.append((r, closed, "", "", 0))
        except ModelError as exc:
            raise ConfigError(str(exc)) from exc
    header = ["range_kb", "p_avg", "monte_carlo", "stderr", "trials"]
    if fmt == "csv" or out_path:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[0], f"{row[1]:.6f}", row[2], row[3], row[4]])
        rendered = buf.getvalue()
    if fmt == "text":
        click.echo("  ".join(f"{h:<12}" for h in header))
        for row in rows:
            cells = [row[0], f"{row[1]:.6f}", row[2] or "-", row[3] or "-", str(row[4])]
            click.echo("  ".join(f"{c:<12}" for c in cells))
    else:
        click.echo(rendered, nl=False)
    if out_path:
        Path(out_path).write_text(rendered)


@cli.command("sweep")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--trace", "trace_path", type=click.Path(), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True, help="CSV output file.")
@click.option("--thresholds", default="10,50,100,200,500,1000",
              help="Comma-separated fixed resize thresholds.")
@click.option("--seed", type=int, default=None)
def cmd_sweep(config_path, trace_path, out_path, thresholds, seed):
    """Replay one trace per fixed resize threshold plus once in dynamic mode."""
    started = time.time()
    base = load_config(config_path, seed)
    if base.mode != MODE_BACKUP:
        raise ConfigError("sweep requires a backup-mode config")
    try:
        values = [int(t) for t in thresholds.split(",") if t.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --thresholds: {exc}") from exc
    if any(t < 1 for t in values):
        raise click.UsageError("thresholds must be positive")
    records = _read_trace(trace_path)
    rows = []
    for threshold in values:
        config = SimConfig(
            mode=base.mode, l1d=base.l1d, l2=base.l2,
            backup_capacity=base.backup_capacity, backup_min=base.backup_min,
            backup_max=base.backup_max, memory_penalty_cycles=base.memory_penalty_cycles,
            seed=base.seed, resize_mode=RESIZE_FIXED, fixed_threshold=threshold)
        stats = run_trace(Simulator(config), records)
        rows.append((str(threshold), stats))
    dyn = SimConfig(
        mode=base.mode, l1d=base.l1d, l2=base.l2,
        backup_capacity=base.backup_capacity, backup_min=base.backup_min,
        backup_max=base.backup_max, memory_penalty_cycles=base.memory_penalty_cycles,
        seed=base.seed, resize_mode=RESIZE_DYNAMIC)
    rows.append(("dynamic", run_trace(Simulator(dyn), records)))
    out = Path(out_path)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "resize_count", "avg_access_latency",
                         "l1d_misses", "l2_misses"])
        for label, stats in rows:
            writer.writerow([label, stats.resizes, f"{stats.avg_access_latency:.6f}",
                             stats.l1d_misses, stats.l2_misses])
    _write_manifest(out, "sweep", base, [str(out)], started)
    click.echo(f"wrote {out}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except (ConfigError, ModelError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except (TraceError, InputDataError) as exc:
        click.echo(f"input error: {exc}", err=True)
        return EXIT_INPUT
    except CacheError as exc:
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
