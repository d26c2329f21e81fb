"""Command-line surface binding all modules.

Exit codes: 0 success, 1 domain error (one line ``ERROR <code>: <message>``
on stderr), 2 usage error.
"""

from __future__ import annotations

import csv
import functools
import sys

import click
import numpy as np

from . import analytic as analytic_mod
from . import greedy as greedy_mod
from . import linfit, manifold, masterkeys, normalize as normalize_mod
from .errors import FilterDistillError
from .filterbank import BankEntry, Filter, FilterBank, bank_stats, load_bank, save_bank
from .render import RenderConfig, VMAX_GLOBAL, VMAX_PER_FILTER, render_bank


def domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FilterDistillError as exc:
            click.echo(f"ERROR {exc.code}: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def cli():
    """Filter-basis distillation toolkit."""


@cli.command("import-json")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def import_json(in_path, out_path):
    """Convert a JSON manifest to MKFB binary."""
    save_bank(load_bank(in_path, format="json"), out_path, format="binary")


@cli.command("export-json")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def export_json(in_path, out_path):
    """Convert an MKFB binary bank to a JSON manifest."""
    save_bank(load_bank(in_path, format="binary"), out_path, format="json")


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--rejects", "rejects_path", type=click.Path())
@domain_errors
def normalize(in_path, out_path, rejects_path):
    """Center and unit-scale every filter; constant filters are rejected."""
    bank = load_bank(in_path)
    normed, rejected = normalize_mod.normalize_bank(bank)
    kept = [i for i in range(len(bank)) if i not in set(rejected)]
    entries = [
        BankEntry(bank[i].layer_index, bank[i].channel_index, Filter(nf.values))
        for i, nf in zip(kept, normed)
    ]
    save_bank(FilterBank(bank.k, entries), out_path)
    if rejects_path:
        with open(rejects_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["layer", "channel", "reason"])
            for i in rejected:
                writer.writerow(
                    [bank[i].layer_index, bank[i].channel_index, "ZeroVariance"]
                )
    click.echo(f"normalized {len(entries)} filters, rejected {len(rejected)}")


@cli.command()
@click.option("--bank", "bank_path", required=True, type=click.Path())
@click.option("--candidates", "cand_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def fit(bank_path, cand_path, out_path):
    """Assign each bank filter its best linear-shift candidate."""
    bank = load_bank(bank_path)
    candidates = load_bank(cand_path)
    assignment = linfit.assign_best(candidates, bank)
    linfit.save_assignment_csv(assignment, bank, out_path)
    click.echo(f"fitted {len(assignment)} filters against {len(candidates)} candidates")


@cli.command()
@click.option("--bank", "bank_path", required=True, type=click.Path())
@click.option("--candidates", "cand_path", required=True, type=click.Path())
@click.option("--assignment", "assign_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def replace(bank_path, cand_path, assign_path, out_path):
    """Rebuild the bank from its assigned linear shifts."""
    bank = load_bank(bank_path)
    candidates = load_bank(cand_path)
    assignment = linfit.load_assignment_csv(assign_path, bank, candidates)
    save_bank(linfit.replace_bank(bank, candidates, assignment), out_path)


@cli.command()
@click.option("--bank", "bank_path", type=click.Path())
@click.option("--assignment", "assign_path", type=click.Path())
@click.option("--threshold", type=float)
@domain_errors
def stats(bank_path, assign_path, threshold):
    """Bank statistics and/or assignment coverage."""
    if not bank_path and not assign_path:
        raise click.UsageError("give --bank and/or --assignment")
    if bank_path:
        s = bank_stats(load_bank(bank_path))
        click.echo(
            f"count={s.count} mean_norm={s.mean_norm:.9g} "
            f"mean_abs_mean={s.mean_abs_mean:.9g} layers={len(s.per_layer_counts)}"
        )
    if assign_path:
        if threshold is None:
            raise click.UsageError("--assignment requires --threshold")
        with open(assign_path, newline="") as fh:
            residuals = [float(r["residual"]) for r in csv.DictReader(fh)]
        if residuals:
            frac = sum(1 for r in residuals if r <= threshold) / len(residuals)
        else:
            frac = 1.0
        click.echo(f"coverage={frac:.9g} threshold={threshold:.9g} n={len(residuals)}")


@cli.group()
def distill():
    """Autoencoder training and candidate sampling."""


@distill.command("train-ae")
@click.option("--bank", "bank_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--epochs", default=500, show_default=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--batch-size", default=256, show_default=True, type=int)
@click.option("--lr", default=1e-3, show_default=True, type=float)
@domain_errors
def train_ae(bank_path, out_path, epochs, seed, batch_size, lr):
    """Train the 1D-code autoencoder on a bank of filters."""
    bank = load_bank(bank_path)
    normed, rejected = normalize_mod.normalize_bank(bank)
    config = manifold.TrainConfig(
        epochs=epochs, seed=seed, batch_size=batch_size, learning_rate=lr
    )
    model, history = manifold.train_autoencoder(normed, config)
    manifold.save_model(model, out_path)
    click.echo(
        f"trained on {len(normed)} filters ({len(rejected)} rejected), "
        f"final MSE {history[-1]:.9g}"
    )


@distill.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--n", default=50, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def sample(model_path, n, out_path):
    """Decode n codes uniformly spaced over [0, 1]."""
    model = manifold.load_model(model_path)
    save_bank(manifold.sample_uniform(model, n), out_path)


@distill.command()
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--centers", "centers_path", required=True, type=click.Path(),
              help="CSV with a 'code' column")
@click.option("--per-center", default=4, show_default=True, type=int)
@click.option("--delta", required=True, type=float)
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def expand(model_path, centers_path, per_center, delta, out_path):
    """Decode codes in a neighborhood around each given center."""
    model = manifold.load_model(model_path)
    with open(centers_path, newline="") as fh:
        centers = [float(r["code"]) for r in csv.DictReader(fh)]
    save_bank(manifold.sample_around(model, centers, per_center, delta), out_path)


@cli.command("greedy")
@click.option("--bank", "bank_path", required=True, type=click.Path())
@click.option("--candidates", "cand_path", required=True, type=click.Path())
@click.option("--objective", type=click.Choice(["residual", "external"]),
              default="residual", show_default=True)
@click.option("--evaluator-cmd", default="")
@click.option("--stop-at", default=1, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def greedy_cmd(bank_path, cand_path, objective, evaluator_cmd, stop_at, out_path):
    """Backward-eliminate candidates, writing the trace CSV."""
    if objective == "external" and not evaluator_cmd:
        raise click.UsageError("--objective external requires --evaluator-cmd")
    bank = load_bank(bank_path)
    candidates = load_bank(cand_path)
    obj = (
        greedy_mod.Objective(greedy_mod.INTRINSIC_RESIDUAL)
        if objective == "residual"
        else greedy_mod.Objective(greedy_mod.EXTERNAL_COMMAND, evaluator_cmd)
    )
    trace = greedy_mod.greedy_eliminate(bank, candidates, obj, stop_at=stop_at)
    greedy_mod.save_trace_csv(trace, out_path)
    click.echo(f"survivors: {','.join(str(i) for i in sorted(trace.survivors))}")


@cli.group("analytic")
def analytic_group():
    """Analytic scale-space kernels."""


@analytic_group.command()
@click.option("--family", required=True,
              type=click.Choice(list(analytic_mod.FAMILIES)))
@click.option("--sigma", required=True, type=float)
@click.option("--sigma2", type=float)
@click.option("--k", default=7, show_default=True, type=int)
@click.option("--norm", default="raw", show_default=True,
              type=click.Choice(["raw", "l1", "l2"]))
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def gen(family, sigma, sigma2, k, norm, out_path):
    """Generate one analytic kernel as a single-filter bank."""
    normalization = {
        "raw": analytic_mod.NORM_RAW,
        "l1": analytic_mod.NORM_UNIT_L1_COMPONENTS,
        "l2": analytic_mod.NORM_UNIT_L2,
    }[norm]
    spec = analytic_mod.AnalyticKernelSpec(
        family=family, sigma=sigma, sigma2=sigma2, k=k, normalization=normalization
    )
    f = analytic_mod.generate(spec)
    save_bank(FilterBank.from_filters([f]), out_path)


@analytic_group.command("fit")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--family", default="all", show_default=True,
              type=click.Choice(["all"] + list(analytic_mod.FAMILIES)))
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def analytic_fit(in_path, family, out_path):
    """Fit analytic families to every filter in a bank."""
    bank = load_bank(in_path)
    families = analytic_mod.FAMILIES if family == "all" else (family,)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["layer", "channel", "family", "sigma", "sigma2", "similarity", "residual"]
        )
        for entry in bank:
            for fam in families:
                ff = analytic_mod.fit_family(entry.filter, fam)
                writer.writerow(
                    [
                        entry.layer_index,
                        entry.channel_index,
                        fam,
                        f"{ff.sigma:.9g}",
                        "" if ff.sigma2 is None else f"{ff.sigma2:.9g}",
                        f"{ff.similarity:.9g}",
                        f"{ff.linshift_residual:.9g}",
                    ]
                )


@cli.group("masterkeys")
def masterkeys_group():
    """The bundled 8-filter universal set."""


@masterkeys_group.command("export")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "fmt", default="binary", show_default=True,
              type=click.Choice(["binary", "json"]))
@domain_errors
def masterkeys_export(out_path, fmt):
    masterkeys.export_masters(out_path, format=fmt)


@masterkeys_group.command("verify")
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def masterkeys_verify(out_path):
    rows, cosines = masterkeys.verify_masters()
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filter", "mean", "norm", "best_family", "similarity"])
        for r in rows:
            writer.writerow(
                [r.number, f"{r.mean:.9g}", f"{r.norm:.9g}", r.best_family,
                 f"{r.similarity:.9g}"]
            )
        writer.writerow([])
        writer.writerow(["pairwise_abs_centered_cosine"] + [str(i + 1) for i in range(len(rows))])
        for i, row in enumerate(np.asarray(cosines)):
            writer.writerow([i + 1] + [f"{v:.9g}" for v in row])
    for r in rows:
        click.echo(
            f"filter {r.number}: mean={r.mean:.4f} norm={r.norm:.4f} "
            f"family={r.best_family} sim={r.similarity:.4f}"
        )


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--cell-pixels", default=32, show_default=True, type=int)
@click.option("--vmax-mode", default="per-filter", show_default=True,
              type=click.Choice(["per-filter", "global"]))
@domain_errors
def render(in_path, out_dir, cell_pixels, vmax_mode):
    """Render each filter as a PPM heatmap."""
    bank = load_bank(in_path)
    config = RenderConfig(
        cell_pixels=cell_pixels,
        vmax_mode=VMAX_PER_FILTER if vmax_mode == "per-filter" else VMAX_GLOBAL,
    )
    paths = render_bank(bank, config, out_dir)
    click.echo(f"wrote {len(paths)} images to {out_dir}")


@cli.command()
@click.option("--trace", "trace_path", type=click.Path())
@click.option("--assignment", "assign_path", type=click.Path())
@click.option("--threshold", type=float)
@click.option("--fits", "fits_path", type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def report(trace_path, assign_path, threshold, fits_path, out_path):
    """Bundle greedy trace, coverage and analytic fits into one CSV."""
    if not (trace_path or assign_path or fits_path):
        raise click.UsageError("nothing to report")
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["section", "data"])
        if trace_path:
            with open(trace_path, newline="") as src:
                for line in src.read().splitlines():
                    writer.writerow(["trace", line])
        if assign_path:
            if threshold is None:
                raise click.UsageError("--assignment requires --threshold")
            with open(assign_path, newline="") as src:
                residuals = [float(r["residual"]) for r in csv.DictReader(src)]
            frac = (
                sum(1 for r in residuals if r <= threshold) / len(residuals)
                if residuals
                else 1.0
            )
            writer.writerow(["coverage", f"{frac:.9g}"])
        if fits_path:
            with open(fits_path, newline="") as src:
                for line in src.read().splitlines():
                    writer.writerow(["analytic_fit", line])


def main():
    cli()


if __name__ == "__main__":
    main()
