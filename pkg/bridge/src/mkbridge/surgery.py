"""Export, replace and evaluate depthwise filters of a torch model."""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
import torch

from .errors import (
    CoverageGap,
    DatasetMissing,
    HashMismatch,
    ShapeMismatch,
    SkippedLayerWarning,
)
from .formats import normalize, read_assignment, read_bank, write_bank
from .models import ModelRef

EXPORT_K = 7


def _module(ref: ModelRef, path: str):
    return dict(ref.model.named_modules())[path]


def exported_locators(ref: ModelRef):
    """Locators that participate in export/replacement (7x7 only); other
    depthwise kernel sizes are skipped with a warning."""
    kept = []
    for loc in ref.locators:
        if loc.kernel_size != EXPORT_K:
            warnings.warn(
                f"{ref.name}:{loc.module_path} is {loc.kernel_size}x"
                f"{loc.kernel_size}, not {EXPORT_K}x{EXPORT_K}; skipped",
                SkippedLayerWarning,
                stacklevel=2,
            )
            continue
        kept.append(loc)
    return kept


def export_filters(ref: ModelRef, out_path) -> int:
    """Write every 7x7 depthwise kernel to an MKFB bank; returns the count."""
    values, provenance = [], []
    for loc in exported_locators(ref):
        weight = _module(ref, loc.module_path).weight
        if weight.shape != (loc.channels, 1, EXPORT_K, EXPORT_K):
            raise ShapeMismatch(
                f"{loc.module_path}: unexpected weight shape {tuple(weight.shape)}"
            )
        kernels = weight.detach().to(torch.float32).numpy()
        for c in range(loc.channels):
            values.append(kernels[c, 0].astype(np.float64))
            provenance.append((loc.layer_index, c))
    write_bank(np.stack(values), provenance, out_path)
    return len(values)


def apply_assignment(
    ref: ModelRef, candidates_path, assignment_path, fold_a: bool = False
) -> None:
    """Replace each depthwise kernel with a * x-hat + b in place.

    With fold_a, layers followed directly by a pointwise 1x1 conv store
    x-hat + b/a instead and the a factor is absorbed into that conv's
    weights, leaving the network function unchanged; layers without such a
    successor fall back to the unfolded form with a warning.
    """
    bank = read_bank(candidates_path)
    if bank.k != EXPORT_K:
        raise ShapeMismatch(f"candidate bank is {bank.k}x{bank.k}")
    xhat = np.stack([normalize(v) for v in bank.values])
    rows = read_assignment(assignment_path)
    locs = exported_locators(ref)
    expected = {
        (loc.layer_index, c) for loc in locs for c in range(loc.channels)
    }
    if set(rows) != expected:
        missing = len(expected - set(rows))
        extra = len(set(rows) - expected)
        raise CoverageGap(
            f"assignment does not match exported set "
            f"({missing} missing, {extra} unexpected)"
        )
    with torch.no_grad():
        for loc in locs:
            dw = _module(ref, loc.module_path)
            fold_here = fold_a and loc.pointwise_path
            if fold_a and not loc.pointwise_path:
                warnings.warn(
                    f"{loc.module_path}: no pointwise successor, a not folded",
                    SkippedLayerWarning,
                    stacklevel=2,
                )
            scales = torch.ones(loc.channels, dtype=torch.float64)
            for c in range(loc.channels):
                row = rows[(loc.layer_index, c)]
                if not 0 <= row.candidate < len(bank):
                    raise HashMismatch(
                        f"candidate index {row.candidate} outside bank of "
                        f"{len(bank)}"
                    )
                base = xhat[row.candidate]
                if fold_here and row.a != 0.0:
                    kernel = base + row.b / row.a
                    scales[c] = row.a
                    if dw.bias is not None:
                        # the pointwise fold multiplies this channel by a,
                        # so pre-divide the conv bias to keep it invariant
                        dw.bias[c] /= row.a
                else:
                    kernel = row.a * base + row.b
                dw.weight[c, 0] = torch.from_numpy(kernel).to(dw.weight.dtype)
            if fold_here:
                pw = _module(ref, loc.pointwise_path)
                pw.weight *= scales.to(pw.weight.dtype)[None, :, None, None]


def evaluate(
    ref: ModelRef,
    data_dir,
    subset: int = 5000,
    seed: int = 0,
    batch_size: int = 64,
    image_size: int = 224,
) -> float:
    """Top-1 accuracy (percent) on a seed-ordered dataset subset.

    The dataset is an ImageFolder directory; the subset is a deterministic
    seeded permutation prefix, so identical arguments always score the same
    images in the same order.
    """
    from torchvision import datasets, transforms

    root = Path(data_dir)
    if not root.is_dir():
        raise DatasetMissing(f"dataset root {root} not found")
    transform = transforms.Compose(
        [
            transforms.Resize(image_size),
            transforms.CenterCrop(image_size),
            transforms.ToTensor(),
            transforms.Normalize(
                (0.485, 0.456, 0.406), (0.229, 0.224, 0.225)
            ),
        ]
    )
    try:
        dataset = datasets.ImageFolder(str(root), transform=transform)
    except FileNotFoundError as exc:
        raise DatasetMissing(f"{root}: {exc}") from exc
    if len(dataset) == 0:
        raise DatasetMissing(f"{root} contains no images")
    order = np.random.default_rng(seed).permutation(len(dataset))
    indices = order[: min(subset, len(dataset))]
    correct = 0
    with torch.no_grad():
        for start in range(0, len(indices), batch_size):
            chunk = indices[start : start + batch_size]
            batch = torch.stack([dataset[int(i)][0] for i in chunk])
            labels = torch.tensor([dataset.samples[int(i)][1] for i in chunk])
            pred = ref.model(batch).argmax(dim=1)
            correct += int((pred == labels).sum())
    return 100.0 * correct / len(indices)
