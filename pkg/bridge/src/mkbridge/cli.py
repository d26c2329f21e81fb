"""``mk-bridge`` command line: export and evaluator-protocol evaluation.

``mk-bridge eval`` takes the candidates MKFB path and the assignment CSV
path as trailing positional arguments and prints the accuracy as the first
line of stdout, so the full option prefix can be handed to the greedy
search as an external evaluator command.

Exit codes: 0 success, 1 domain error (``ERROR <code>: <message>`` on
stderr), 2 usage error.
"""

from __future__ import annotations

import functools
import sys

import click

from .errors import BridgeError
from .models import MODEL_NAMES, build_model
from .surgery import apply_assignment, evaluate, export_filters


def domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BridgeError as exc:
            click.echo(f"ERROR {exc.code}: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def cli():
    """Depthwise-filter bridge for torch DS-CNN models."""


@cli.command()
@click.option("--model", "model_name", required=True,
              type=click.Choice(MODEL_NAMES))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--init-seed", default=0, show_default=True, type=int,
              help="Seed for the (random) model weights.")
@domain_errors
def export(model_name, out_path, init_seed):
    """Export all 7x7 depthwise kernels to an MKFB bank."""
    ref = build_model(model_name, seed=init_seed)
    count = export_filters(ref, out_path)
    click.echo(f"exported {count} filters from {model_name}")


@cli.command("eval")
@click.option("--model", "model_name", required=True,
              type=click.Choice(MODEL_NAMES))
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--fold-a", is_flag=True, default=False)
@click.option("--subset", default=5000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--batch-size", default=64, show_default=True, type=int)
@click.option("--image-size", default=224, show_default=True, type=int)
@click.option("--init-seed", default=0, show_default=True, type=int)
@click.argument("candidates", type=click.Path())
@click.argument("assignment", type=click.Path())
@domain_errors
def eval_cmd(model_name, data_dir, fold_a, subset, seed, batch_size,
             image_size, init_seed, candidates, assignment):
    """Apply an assignment, then print top-1 accuracy (first stdout line)."""
    ref = build_model(model_name, seed=init_seed)
    apply_assignment(ref, candidates, assignment, fold_a=fold_a)
    accuracy = evaluate(
        ref, data_dir, subset=subset, seed=seed,
        batch_size=batch_size, image_size=image_size,
    )
    click.echo(f"{accuracy:.9g}")


def main():
    cli()


if __name__ == "__main__":
    main()
