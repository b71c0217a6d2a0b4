"""Command-line entry point.

One binary with verb subcommands; all randomness flows through --seed
flags and every primary output is a deterministic file, so reruns with
identical flags are byte-identical.  Exit codes: 0 success, 1 usage error,
2 data error, 3 numeric failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import bnn, evaluation, evolve as evolve_mod, msbnn
from .data import (MoleculeSpec, SynthConfig, load_dataset, save_dataset,
                   synth_dataset)
from .errors import DataError, NumericError
from .features import Tier, assemble
from .vocab import (REGION_NAMES, load_default_vocabulary, load_vocabulary,
                    save_vocabulary)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


def _vocab(path: str | None):
    return load_vocabulary(path) if path else load_default_vocabulary()


def _train_config(iterations, seed, hidden, no_bayesian) -> bnn.TrainConfig:
    hidden_sizes = tuple(int(h) for h in hidden.split(",") if h) if hidden else ()
    return bnn.TrainConfig(max_iterations=iterations, seed=seed,
                           hidden_sizes=hidden_sizes, bayesian=not no_bayesian)


@click.group()
def cli():
    """Inverse design of D-pi-A nonlinear-optical molecules."""


@cli.command()
@click.option("--file", "vocab_path", type=str, default=None,
              help="Vocabulary file (default: bundled vocabulary).")
@click.option("--save", "save_path", type=str, default=None,
              help="Re-serialize the vocabulary to this path.")
def vocab(vocab_path, save_path):
    """Inspect (and optionally re-save) a group vocabulary."""
    v = _vocab(vocab_path)
    for region in REGION_NAMES:
        groups = v.region(region)
        click.echo(f"{region} ({len(groups)}): " + " ".join(g.name for g in groups))
    click.echo(f"connectors ({len(v.connectors)}): "
               + " ".join(c.name for c in v.connectors))
    if save_path:
        save_vocabulary(v, save_path)


@cli.command()
@click.option("--out", required=True, type=str, help="Output dataset file.")
@click.option("--records", required=True, type=int, help="Number of records.")
@click.option("--sigma", default=0.0, type=float, help="Label noise std dev.")
@click.option("--f3-width", default=4, type=int, help="Third-order column count.")
@click.option("--mode", default="linear", type=click.Choice(["linear", "chained"]),
              help="Ground-truth label function shape.")
@click.option("--seed", default=0, type=int, help="Sampling seed.")
@click.option("--vocab", "vocab_path", type=str, default=None,
              help="Vocabulary file (default: bundled).")
def synth(out, records, sigma, f3_width, mode, seed, vocab_path):
    """Generate a synthetic desk-scale dataset."""
    v = _vocab(vocab_path)
    cfg = SynthConfig(n_records=records, noise_sigma=sigma, f3_width=f3_width,
                      mode=mode)
    ds = synth_dataset(cfg, v, seed)
    save_dataset(ds, out, v)
    click.echo(f"wrote {len(ds.records)} records to {out}")


@cli.command()
@click.option("--dataset", required=True, type=str, help="Dataset file.")
@click.option("--out", required=True, type=str, help="Output composite model file.")
@click.option("--tier", default="lgc", type=click.Choice(["lgc", "clgc"]),
              help="Feature tier.")
@click.option("--iterations", default=60, type=int, help="Max LM iterations per stage.")
@click.option("--hidden", default="", type=str,
              help="Comma-separated hidden layer sizes (default: auto).")
@click.option("--seed", default=0, type=int, help="Weight initialization seed.")
@click.option("--no-bayesian", is_flag=True, help="Pin alpha_prior to 0 (plain LM).")
@click.option("--vocab", "vocab_path", type=str, default=None,
              help="Vocabulary file (default: bundled).")
def train(dataset, out, tier, iterations, hidden, seed, no_bayesian, vocab_path):
    """Train the four-stage predictor on a dataset."""
    v = _vocab(vocab_path)
    ds = load_dataset(dataset, v)
    cfg = _train_config(iterations, seed, hidden, no_bayesian)
    model = msbnn.train_msbnn(ds, v, Tier(tier), cfg)
    msbnn.save_msbnn(model, out)
    click.echo(f"wrote {tier} model to {out}")


@cli.command("eval")
@click.option("--dataset", required=True, type=str, help="Dataset file.")
@click.option("--out", required=True, type=str, help="Output report file.")
@click.option("--tier", default="lgc", type=click.Choice(["lgc", "clgc"]),
              help="Feature tier.")
@click.option("--splits", default=100, type=int, help="Number of random splits.")
@click.option("--test-fraction", default=0.2, type=float, help="Held-out fraction.")
@click.option("--seed", default=0, type=int, help="Base seed for split shuffles.")
@click.option("--iterations", default=60, type=int, help="Max LM iterations per stage.")
@click.option("--hidden", default="", type=str,
              help="Comma-separated hidden layer sizes (default: auto).")
@click.option("--vocab", "vocab_path", type=str, default=None,
              help="Vocabulary file (default: bundled).")
def eval_cmd(dataset, out, tier, splits, test_fraction, seed, iterations, hidden,
             vocab_path):
    """Repeated random-split evaluation protocol."""
    v = _vocab(vocab_path)
    ds = load_dataset(dataset, v)
    cfg = _train_config(iterations, seed, hidden, False)
    report = evaluation.repeated_split_eval(
        ds, v, Tier(tier), cfg, n_splits=splits, test_fraction=test_fraction,
        base_seed=seed)
    Path(out).write_text(evaluation.format_report(report))
    click.echo(f"wrote report to {out}")


@cli.command("evolve")
@click.option("--model", "model_path", required=True, type=str,
              help="LGC-tier composite model file.")
@click.option("--out", required=True, type=str, help="Output run artifact file.")
@click.option("--mode", default="regional", type=click.Choice(["regional", "global"]),
              help="Crossover mode.")
@click.option("--pop", default=550, type=int, help="Population size.")
@click.option("--generations", default=100, type=int, help="Generation count.")
@click.option("--mutation-rate", default=0.02, type=float, help="Per-bit flip rate.")
@click.option("--seed", default=0, type=int, help="Evolution seed.")
@click.option("--connector", default=None, type=str,
              help="Pin the connector mode to this vocabulary entry.")
@click.option("--target-mode", default="maximize_lnbeta",
              type=click.Choice(["maximize_lnbeta", "match_lnbeta"]),
              help="Fitness objective.")
@click.option("--target-value", default=0.0, type=float,
              help="ln(beta) target for match mode.")
@click.option("--target-sigma", default=1.0, type=float,
              help="Match-mode width sigma.")
@click.option("--floor", default=0.0, type=float,
              help="Maximize-mode ln(beta) floor.")
@click.option("--vocab", "vocab_path", type=str, default=None,
              help="Vocabulary file (default: bundled).")
def evolve_cmd(model_path, out, mode, pop, generations, mutation_rate, seed,
               connector, target_mode, target_value, target_sigma, floor,
               vocab_path):
    """Evolutionary structure search scored by an LGC-tier model."""
    v = _vocab(vocab_path)
    model = msbnn.load_msbnn(model_path)
    target = evolve_mod.FitnessTarget(mode=target_mode, target_value=target_value,
                                      sigma=target_sigma, floor=floor)
    constants = evolve_mod.ConstantBlock(connector=connector)
    cfg = evolve_mod.EvolutionConfig(
        population_size=pop, generations=generations, mutation_rate=mutation_rate,
        crossover_mode=mode, target=target, constants=constants, seed=seed)
    result = evolve_mod.evolve(cfg, model, v)
    evolve_mod.save_result(result, out)
    click.echo(f"wrote run artifact to {out} "
               f"(best g = {result.trace[-1].best_g:.6g})")


@cli.command()
@click.option("--model", "model_path", required=True, type=str,
              help="cLGC-tier composite model file.")
@click.option("--run", "run_path", required=True, type=str,
              help="Run artifact with candidates to rescore.")
@click.option("--dataset", required=True, type=str,
              help="Dataset supplying third-order descriptors by spec lookup.")
@click.option("--out", required=True, type=str, help="Output rescore file.")
@click.option("--vocab", "vocab_path", type=str, default=None,
              help="Vocabulary file (default: bundled).")
def rescore(model_path, run_path, dataset, out, vocab_path):
    """Re-predict run candidates at the corrected (cLGC) tier."""
    v = _vocab(vocab_path)
    model = msbnn.load_msbnn(model_path)
    ds = load_dataset(dataset, v)
    try:
        run = json.loads(Path(run_path).read_text())
        specs = [MoleculeSpec(tuple(c["spec"]["n_d"]), tuple(c["spec"]["n_pi"]),
                              tuple(c["spec"]["n_a"]), tuple(c["spec"]["n_dpi"]),
                              tuple(c["spec"]["n_pia"]))
                 for c in run["candidates"]]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot read run artifact {run_path}: {exc}") from exc
    lookup = {rec.spec: rec.f3 for rec in ds.records}
    entries = evolve_mod.rescore(specs, model, v, lookup.get)
    payload = [{"spec": evolve_mod._spec_to_dict(e.spec),
                "prediction": evolve_mod._prediction_to_dict(e.prediction),
                "missing_f3": e.missing_f3} for e in entries]
    Path(out).write_text(json.dumps(payload, sort_keys=True, indent=1))
    scored = sum(1 for e in entries if not e.missing_f3)
    click.echo(f"rescored {scored}/{len(entries)} candidates to {out}")


@cli.command()
@click.option("--model", "model_path", required=True, type=str,
              help="Composite model file.")
@click.option("--spec-json", required=True, type=str,
              help="JSON file holding the molecule count vectors (and optional f3).")
@click.option("--vocab", "vocab_path", type=str, default=None,
              help="Vocabulary file (default: bundled).")
def predict(model_path, spec_json, vocab_path):
    """Predict properties for one molecule spec; prints JSON to stdout."""
    v = _vocab(vocab_path)
    model = msbnn.load_msbnn(model_path)
    try:
        body = json.loads(Path(spec_json).read_text())
        spec = MoleculeSpec(tuple(body["n_d"]), tuple(body["n_pi"]),
                            tuple(body["n_a"]), tuple(body["n_dpi"]),
                            tuple(body["n_pia"]))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot read spec file {spec_json}: {exc}") from exc
    spec.validate(v, require_dpa=False)
    f3 = body.get("f3") if model.tier == Tier.CLGC else None
    if model.tier == Tier.CLGC and f3 is None:
        raise DataError("model tier is clgc: spec file must include f3")
    pred = msbnn.predict(model, assemble(spec, v, f3))
    click.echo(json.dumps(evolve_mod._prediction_to_dict(pred), sort_keys=True))


@cli.command()
@click.option("--model", "model_path", default=None, type=str,
              help="Composite model file to load at startup.")
@click.option("--host", default="127.0.0.1", type=str, help="Listen address.")
@click.option("--port", default=8000, type=int, help="Listen port.")
@click.option("--data-dir", default="runs", type=str,
              help="Directory for run artifact files.")
@click.option("--vocab", "vocab_path", type=str, default=None,
              help="Vocabulary file (default: bundled).")
def serve(model_path, host, port, data_dir, vocab_path):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    app = create_app(model_path=model_path, vocab_path=vocab_path,
                     data_dir=data_dir)
    uvicorn.run(app, host=host, port=port)


def run_cli(argv: list[str]) -> int:
    """Dispatch argv; returns the exit code instead of raising SystemExit."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:  # raised by uvicorn shutdown etc.
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
