"""Minimal DS-CNN architectures with 7x7 depthwise stages.

These are structural builds: the layer layout (and therefore the depthwise
filter census) matches the published architectures, but weights are randomly
initialized from a seed since pretrained checkpoints are not fetchable in
this environment. Everything the bridge does - export, replacement, the
evaluator protocol - is weight-agnostic; accuracy figures are only
meaningful when real checkpoints are loaded into the same modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from .errors import UnknownModel


class LayerNorm2d(nn.Module):
    """LayerNorm over the channel dim of an NCHW tensor."""

    def __init__(self, dim, eps=1e-6):
        super().__init__()
        self.weight = nn.Parameter(torch.ones(dim))
        self.bias = nn.Parameter(torch.zeros(dim))
        self.eps = eps

    def forward(self, x):
        mu = x.mean(1, keepdim=True)
        var = (x - mu).pow(2).mean(1, keepdim=True)
        x = (x - mu) / torch.sqrt(var + self.eps)
        return x * self.weight[:, None, None] + self.bias[:, None, None]


class GRN(nn.Module):
    """Global response normalization over channels-last features."""

    def __init__(self, dim):
        super().__init__()
        self.gamma = nn.Parameter(torch.zeros(1, 1, 1, dim))
        self.beta = nn.Parameter(torch.zeros(1, 1, 1, dim))

    def forward(self, x):
        gx = torch.norm(x, p=2, dim=(1, 2), keepdim=True)
        nx = gx / (gx.mean(dim=-1, keepdim=True) + 1e-6)
        return self.gamma * (x * nx) + self.beta + x


class ConvNeXtV2Block(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.dwconv = nn.Conv2d(dim, dim, 7, padding=3, groups=dim)
        self.norm = nn.LayerNorm(dim, eps=1e-6)
        self.pwconv1 = nn.Linear(dim, 4 * dim)
        self.act = nn.GELU()
        self.grn = GRN(4 * dim)
        self.pwconv2 = nn.Linear(4 * dim, dim)

    def forward(self, x):
        shortcut = x
        x = self.dwconv(x)
        x = x.permute(0, 2, 3, 1)
        x = self.pwconv2(self.grn(self.act(self.pwconv1(self.norm(x)))))
        return shortcut + x.permute(0, 3, 1, 2)


class ConvNeXtV2(nn.Module):
    def __init__(self, depths, dims, num_classes=1000):
        super().__init__()
        self.downsample = nn.ModuleList()
        self.downsample.append(
            nn.Sequential(nn.Conv2d(3, dims[0], 4, stride=4), LayerNorm2d(dims[0]))
        )
        for i in range(3):
            self.downsample.append(
                nn.Sequential(
                    LayerNorm2d(dims[i]),
                    nn.Conv2d(dims[i], dims[i + 1], 2, stride=2),
                )
            )
        self.stages = nn.ModuleList(
            nn.Sequential(*[ConvNeXtV2Block(dims[i]) for _ in range(depths[i])])
            for i in range(4)
        )
        self.norm = nn.LayerNorm(dims[-1], eps=1e-6)
        self.head = nn.Linear(dims[-1], num_classes)

    def forward(self, x):
        for down, stage in zip(self.downsample, self.stages):
            x = stage(down(x))
        return self.head(self.norm(x.mean(dim=(-2, -1))))


class GnConv(nn.Module):
    """Recursive gated convolution; one shared 7x7 depthwise conv over all
    scale groups (channel total dim * (2 - 2**(1 - order)))."""

    def __init__(self, dim, order):
        super().__init__()
        self.dims = [dim // 2**i for i in range(order)]
        self.dims.reverse()
        self.proj_in = nn.Conv2d(dim, 2 * dim, 1)
        total = sum(self.dims)
        self.dwconv = nn.Conv2d(total, total, 7, padding=3, groups=total)
        self.projs = nn.ModuleList(
            nn.Conv2d(self.dims[i], self.dims[i + 1], 1)
            for i in range(order - 1)
        )
        self.proj_out = nn.Conv2d(dim, dim, 1)

    def forward(self, x):
        fused = self.proj_in(x)
        pw, rest = torch.split(fused, (self.dims[0], sum(self.dims)), dim=1)
        rest = self.dwconv(rest) / 3.0
        parts = torch.split(rest, self.dims, dim=1)
        x = pw * parts[0]
        for proj, part in zip(self.projs, parts[1:]):
            x = proj(x) * part
        return self.proj_out(x)


class HorNetBlock(nn.Module):
    def __init__(self, dim, order):
        super().__init__()
        self.norm1 = LayerNorm2d(dim)
        self.gnconv = GnConv(dim, order)
        self.norm2 = nn.LayerNorm(dim, eps=1e-6)
        self.pwconv1 = nn.Linear(dim, 4 * dim)
        self.act = nn.GELU()
        self.pwconv2 = nn.Linear(4 * dim, dim)

    def forward(self, x):
        x = x + self.gnconv(self.norm1(x))
        shortcut = x
        y = x.permute(0, 2, 3, 1)
        y = self.pwconv2(self.act(self.pwconv1(self.norm2(y))))
        return shortcut + y.permute(0, 3, 1, 2)


class HorNet(nn.Module):
    def __init__(self, depths, base_dim, orders, num_classes=1000):
        super().__init__()
        dims = [base_dim * 2**i for i in range(4)]
        self.downsample = nn.ModuleList()
        self.downsample.append(
            nn.Sequential(nn.Conv2d(3, dims[0], 4, stride=4), LayerNorm2d(dims[0]))
        )
        for i in range(3):
            self.downsample.append(
                nn.Sequential(
                    LayerNorm2d(dims[i]),
                    nn.Conv2d(dims[i], dims[i + 1], 2, stride=2),
                )
            )
        self.stages = nn.ModuleList(
            nn.Sequential(
                *[HorNetBlock(dims[i], orders[i]) for _ in range(depths[i])]
            )
            for i in range(4)
        )
        self.norm = nn.LayerNorm(dims[-1], eps=1e-6)
        self.head = nn.Linear(dims[-1], num_classes)

    def forward(self, x):
        for down, stage in zip(self.downsample, self.stages):
            x = stage(down(x))
        return self.head(self.norm(x.mean(dim=(-2, -1))))


class DsCnnSmall(nn.Module):
    """Tiny depthwise-separable net whose pointwise layer directly follows
    each depthwise conv, so the a-fold is exact. Used for interface and
    equivalence testing at desk scale."""

    def __init__(self, width=16, blocks=2, num_classes=10):
        super().__init__()
        self.stem = nn.Conv2d(3, width, 8, stride=8)
        layers = []
        for _ in range(blocks):
            layers += [
                nn.Conv2d(width, width, 7, padding=3, groups=width),
                nn.Conv2d(width, width, 1),
                nn.ReLU(),
            ]
        self.body = nn.Sequential(*layers)
        self.head = nn.Linear(width, num_classes)

    def forward(self, x):
        x = self.body(self.stem(x))
        return self.head(x.mean(dim=(-2, -1)))


@dataclass(frozen=True)
class DepthwiseLocator:
    layer_index: int
    module_path: str
    channels: int
    kernel_size: int
    pointwise_path: str = ""  # 1x1 conv directly consuming the output, if any


@dataclass(frozen=True)
class ModelRef:
    name: str
    model: nn.Module
    locators: tuple = field(default_factory=tuple)


_BUILDERS = {
    "convnextv2_pico": lambda: ConvNeXtV2((2, 2, 6, 2), (64, 128, 256, 512)),
    "convnextv2_tiny": lambda: ConvNeXtV2((3, 3, 9, 3), (96, 192, 384, 768)),
    "convnextv2_base": lambda: ConvNeXtV2((3, 3, 27, 3), (128, 256, 512, 1024)),
    "hornet_tiny": lambda: HorNet((2, 3, 18, 2), 64, (2, 3, 4, 5)),
    "dscnn_small": DsCnnSmall,
}

MODEL_NAMES = tuple(sorted(_BUILDERS))


def _depthwise_locators(model: nn.Module) -> tuple:
    named = dict(model.named_modules())
    paths = []
    for path, mod in model.named_modules():
        if (
            isinstance(mod, nn.Conv2d)
            and mod.groups == mod.in_channels == mod.out_channels
            and mod.groups > 1
        ):
            paths.append((path, mod))
    locs = []
    for i, (path, mod) in enumerate(paths):
        # a pointwise successor enables the exact a-fold; detected only for
        # the flat Sequential layout of DsCnnSmall
        pw_path = ""
        parts = path.rsplit(".", 1)
        if len(parts) == 2 and parts[1].isdigit():
            sibling = f"{parts[0]}.{int(parts[1]) + 1}"
            nxt = named.get(sibling)
            if isinstance(nxt, nn.Conv2d) and nxt.kernel_size == (1, 1):
                pw_path = sibling
        locs.append(
            DepthwiseLocator(
                layer_index=i,
                module_path=path,
                channels=mod.out_channels,
                kernel_size=mod.kernel_size[0],
                pointwise_path=pw_path,
            )
        )
    return tuple(locs)


def build_model(name: str, seed: int = 0) -> ModelRef:
    if name not in _BUILDERS:
        raise UnknownModel(f"unknown model {name!r}; known: {', '.join(MODEL_NAMES)}")
    torch.manual_seed(seed)
    model = _BUILDERS[name]()
    model.eval()
    return ModelRef(name=name, model=model, locators=_depthwise_locators(model))
