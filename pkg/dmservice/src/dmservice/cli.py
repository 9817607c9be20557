"""Command-line entry points: train a model directory, serve verdicts."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict

import click

from . import __version__
from .train import DmHyperparams, EmptyCorpus, train_dm


@click.group()
@click.version_option(__version__)
def cli():
    """Train and serve the transformer accept/reject classifier."""


@cli.command("train")
@click.option("--train", "train_file", type=click.Path(exists=True), required=True)
@click.option("--dev", "dev_file", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True, help="Model directory.")
@click.option("--lr", type=float, default=DmHyperparams.learning_rate)
@click.option("--weight-decay", type=float, default=DmHyperparams.weight_decay)
@click.option("--warmup-steps", type=int, default=DmHyperparams.warmup_steps)
@click.option("--epochs", type=int, default=DmHyperparams.epochs)
@click.option("--batch-size", type=int, default=DmHyperparams.batch_size)
@click.option("--w-reject", type=float, default=DmHyperparams.class_weights[0])
@click.option("--w-accept", type=float, default=DmHyperparams.class_weights[1])
@click.option("--max-input-tokens", type=int, default=DmHyperparams.max_input_tokens)
@click.option("--seed", type=int, default=DmHyperparams.seed)
def cmd_train(train_file, dev_file, out, lr, weight_decay, warmup_steps, epochs,
              batch_size, w_reject, w_accept, max_input_tokens, seed):
    hyper = DmHyperparams(
        learning_rate=lr,
        weight_decay=weight_decay,
        warmup_steps=warmup_steps,
        epochs=epochs,
        batch_size=batch_size,
        class_weights=(w_reject, w_accept),
        max_input_tokens=max_input_tokens,
        seed=seed,
    )
    report = train_dm(train_file, dev_file, hyper, out_dir=out)
    click.echo(json.dumps({"model_dir": out, **asdict(report)}))


@cli.command("serve")
@click.option("--model-dir", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8080)
@click.option("--threshold", type=float, default=None)
def cmd_serve(model_dir, host, port, threshold):
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(model_dir, threshold), host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except (EmptyCorpus, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
