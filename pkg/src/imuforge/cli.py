"""Command-line surface.

    imuforge simulate  --bundle B.json --out DIR [--seed N]
    imuforge augment   --bundle B.json --mode ppda --policy P.json
                       --window 100 --stride 25 --batch 64 --batches 10
                       --out FILE [--seed N]
    imuforge serve     --bundle B.json --mode ppda --policy P.json
                       --window 100 --stride 25 --batch 64 --port 9000
                       [--rounds N] [--seed N] [--log-json PATH]
    imuforge policy    init --mode ppda --out P.json [...]
    imuforge policy    inspect --policy P.json

Exit codes: 0 ok, 2 configuration error, 3 I/O error, 4 protocol error.
Every run logs seed, mode, policy digest and tool version, which is
enough to reproduce its output byte for byte.
"""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, dataio, policy as policy_mod, rng
from .server import BatchPipeline, BatchServer, PipelineSettings

logger = logging.getLogger("imuforge")

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (dataio.FrameError,) as exc:
            _fail(EXIT_PROTOCOL, str(exc))
        except (dataio.SchemaError, dataio.CsvFormatError, policy_mod.PolicyError, ValueError) as exc:
            _fail(EXIT_CONFIG, str(exc))
        except OSError as exc:
            _fail(EXIT_IO, str(exc))

    return wrapper


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = rng.entropy_seed()
    return seed


def _log_run(seed: int, mode: str | None, config=None) -> None:
    digest = policy_mod.config_digest(config) if config is not None else "-"
    logger.info(
        "seed=%d mode=%s policy=%s version=%s", seed, mode or "-", digest, __version__
    )
    click.echo(f"seed={seed}", err=True)


@click.group()
@click.version_option(__version__)
def main():
    """Virtual IMU synthesis and augmentation toolkit."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None, help="Defaults to fresh entropy (echoed).")
@handle_errors
def simulate(bundle_path, out_dir, seed):
    """Synthesize baseline traces and write one CSV per sensor."""
    seed = _resolve_seed(seed)
    _log_run(seed, None)
    bundle, _labels = dataio.load_bundle(bundle_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for trace in bundle.synthesize(seed):
        target = out / f"{trace.sensor_id}.csv"
        dataio.write_trace_csv(trace, target)
        click.echo(f"wrote {target}")


def _pipeline_options(fn):
    options = [
        click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True)),
        click.option("--mode", type=click.Choice(["stda", "ppda"]), required=True),
        click.option("--policy", "policy_path", required=True, type=click.Path(exists=True)),
        click.option("--window", "window_size", type=int, required=True),
        click.option("--stride", type=int, required=True),
        click.option("--batch", "batch_size", type=int, required=True),
        click.option("--seed", type=int, default=None),
        click.option("--workers", type=int, default=4, show_default=True),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_pipeline(bundle_path, policy_path, mode, window_size, stride, batch_size, seed, workers):
    bundle, labels = dataio.load_bundle(bundle_path)
    config = policy_mod.load_config(policy_path)
    if config.mode != mode:
        raise policy_mod.PolicyError(
            f"policy file is for mode {config.mode!r}, requested {mode!r}"
        )
    state = policy_mod.build(config)
    settings = PipelineSettings(
        mode=mode,
        window_size=window_size,
        stride=stride,
        batch_size=batch_size,
        seed=seed,
        workers=workers,
    )
    return BatchPipeline(bundle, labels, config, settings), state, config


@main.command()
@_pipeline_options
@click.option("--batches", type=int, required=True, help="Number of mini-batches to emit.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@handle_errors
def augment(bundle_path, mode, policy_path, window_size, stride, batch_size, seed, workers,
            batches, out_path):
    """Emit augmented mini-batches to a frame file (deterministic per seed)."""
    seed = _resolve_seed(seed)
    pipeline, state, config = _build_pipeline(
        bundle_path, policy_path, mode, window_size, stride, batch_size, seed, workers
    )
    _log_run(seed, mode, config)
    with open(out_path, "wb") as out:
        for round_index in range(batches):
            sp_index, data, labels = pipeline.build_round(state, round_index)
            dataio.write_frame(out, dataio.encode_announce(sp_index))
            dataio.write_frame(out, dataio.encode_batch(data, labels))
    click.echo(f"wrote {batches} batches to {out_path}")


@main.command()
@_pipeline_options
@click.option("--port", type=int, required=True, help="TCP port; 0 picks a free one.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--rounds", type=int, default=0, show_default=True,
              help="Rounds to serve; 0 streams until the client disconnects.")
@click.option("--log-json", "log_json", type=click.Path(dir_okay=False), default=None,
              help="Write one JSON line per round (round, subpolicy, probabilities).")
@handle_errors
def serve(bundle_path, mode, policy_path, window_size, stride, batch_size, seed, workers,
          port, host, rounds, log_json):
    """Stream batches over TCP, applying reward updates between rounds."""
    seed = _resolve_seed(seed)
    pipeline, state, config = _build_pipeline(
        bundle_path, policy_path, mode, window_size, stride, batch_size, seed, workers
    )
    _log_run(seed, mode, config)
    server = BatchServer(
        pipeline, state, host=host, port=port, rounds=rounds, log_json=log_json
    )
    click.echo(f"listening host={host} port={server.port}")
    sys.stdout.flush()
    server.serve()


@main.group()
def policy():
    """Inspect or create policy configuration documents."""


@policy.command("init")
@click.option("--mode", type=click.Choice(["stda", "ppda"]), required=True)
@click.option("--kind", type=click.Choice(["combinatorial", "binary"]),
              default="combinatorial", show_default=True)
@click.option("--binary-category", default=None, help="Category for kind=binary.")
@click.option("--binary-method", default=None, help="Method for kind=binary.")
@click.option("--binary-option", type=int, default=0, show_default=True)
@click.option("--learning-rate", type=float, default=policy_mod.DEFAULT_LEARNING_RATE,
              show_default=True)
@click.option("--floor", type=float, default=policy_mod.DEFAULT_FLOOR, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@handle_errors
def policy_init(mode, kind, binary_category, binary_method, binary_option,
                learning_rate, floor, out_path):
    """Write a stock policy document with the full parameter grids."""
    binary_choice = None
    if kind == "binary":
        if not binary_category or not binary_method:
            raise policy_mod.PolicyError(
                "kind=binary requires --binary-category and --binary-method"
            )
        binary_choice = (binary_category, binary_method, binary_option)
    config = policy_mod.default_config(
        mode, kind=kind, binary_choice=binary_choice,
        learning_rate=learning_rate, floor=floor,
    )
    policy_mod.build(config)  # validates the space
    policy_mod.save_config(config, out_path)
    click.echo(f"wrote {out_path}")


@policy.command("inspect")
@click.option("--policy", "policy_path", required=True, type=click.Path(exists=True))
@handle_errors
def policy_inspect(policy_path):
    """Print the sub-policy space size and sampling probabilities."""
    config = policy_mod.load_config(policy_path)
    state = policy_mod.build(config)
    probs = state.probabilities
    if np.ptp(probs) < 1e-15:
        click.echo(f"{len(state)} sub-policies, uniform {probs[0]:.7f}")
    else:
        click.echo(
            f"{len(state)} sub-policies, probabilities min={probs.min():.7f} "
            f"max={probs.max():.7f}"
        )
    if len(state) <= 16:
        for i, (sp, p) in enumerate(zip(state.subpolicies, probs)):
            click.echo(f"  [{i}] p={p:.7f} {sp.describe()}")


if __name__ == "__main__":
    main()
