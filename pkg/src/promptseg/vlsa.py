"""Toy replica of the vision-language-to-prompt tensor data flow.

Deterministic, parameter-injected implementations of pixel shuffle, token
concatenation/separation, layer normalization, and the scaled projection that
maps visual tokens into a dense prompt-embedding grid. Used for shape and
conservation verification only; nothing here is trainable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import IncompatibleDims, NoVisualTokens, WidthMismatch

LN_EPS = 1e-5


def _as_fraction(ratio) -> Fraction:
    f = Fraction(ratio).limit_denominator(64)
    if f <= 0:
        raise IncompatibleDims(f"ratio must be positive, got {ratio}")
    return f


def pixel_shuffle(t: np.ndarray, ratio) -> np.ndarray:
    """Rearrange (B, H, W, C) -> (B, H*ratio, W*ratio, C/ratio^2) losslessly.

    For an integer upscale r, output pixel (h*r+i, w*r+j) at channel c reads
    input channel c*r*r + i*r + j at (h, w); a fractional ratio 1/s applies
    the exact inverse. The element multiset is preserved.
    """
    t = np.asarray(t)
    if t.ndim != 4:
        raise IncompatibleDims(f"expected rank-4 tensor, got shape {t.shape}")
    b, h, w, c = t.shape
    frac = _as_fraction(ratio)
    if frac == 1:
        return t.copy()
    if frac.denominator == 1:
        r = frac.numerator
        if c % (r * r) != 0:
            raise IncompatibleDims(f"channels {c} not divisible by ratio^2 = {r * r}")
        cp = c // (r * r)
        x = t.reshape(b, h, w, cp, r, r)
        x = x.transpose(0, 1, 4, 2, 5, 3)
        return np.ascontiguousarray(x.reshape(b, h * r, w * r, cp))
    if frac.numerator == 1:
        s = frac.denominator
        if h % s != 0 or w % s != 0:
            raise IncompatibleDims(f"spatial dims {h}x{w} not divisible by {s}")
        x = t.reshape(b, h // s, s, w // s, s, c)
        x = x.transpose(0, 1, 3, 5, 2, 4)
        return np.ascontiguousarray(x.reshape(b, h // s, w // s, c * s * s))
    raise IncompatibleDims(f"ratio must be an integer or unit fraction, got {ratio}")


@dataclass
class TokenSequence:
    """Flat token list with a recorded visual/text layout.

    `visual_grid` remembers the (h, w) spatial arrangement of the visual
    prefix so it can be restored after language-side processing.
    """

    tokens: np.ndarray  # (n, width)
    n_visual: int
    n_text: int
    visual_grid: tuple[int, int] | None = None

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.float64)
        if self.tokens.ndim != 2:
            raise WidthMismatch(f"tokens must be (n, width), got {self.tokens.shape}")
        if self.n_visual + self.n_text != len(self.tokens):
            raise ValueError("layout counts must sum to the token count")

    @property
    def width(self) -> int:
        return self.tokens.shape[1]


def tokens_from_tensor(t: np.ndarray) -> TokenSequence:
    """Flatten a (1, h, w, c) tensor into visual tokens in row-major order."""
    t = np.asarray(t)
    if t.ndim != 4 or t.shape[0] != 1:
        raise IncompatibleDims(f"expected (1, h, w, c), got shape {t.shape}")
    _, h, w, c = t.shape
    return TokenSequence(
        tokens=t.reshape(h * w, c), n_visual=h * w, n_text=0, visual_grid=(h, w)
    )


def tensor_from_tokens(seq: TokenSequence) -> np.ndarray:
    """Inverse of tokens_from_tensor for the visual prefix."""
    if seq.visual_grid is None:
        raise NoVisualTokens("sequence has no recorded visual grid")
    h, w = seq.visual_grid
    return seq.tokens[: h * w].reshape(1, h, w, seq.width)


def concat_tokens(visual: TokenSequence, text: TokenSequence) -> TokenSequence:
    """Visual tokens first, text tokens after; widths must agree."""
    if visual.width != text.width:
        raise WidthMismatch(f"widths differ: {visual.width} vs {text.width}")
    return TokenSequence(
        tokens=np.concatenate([visual.tokens, text.tokens], axis=0),
        n_visual=len(visual.tokens),
        n_text=len(text.tokens),
        visual_grid=visual.visual_grid,
    )


def split_visual_tokens(hidden: TokenSequence) -> TokenSequence:
    """First n_visual tokens, with the recorded grid shape retained."""
    if hidden.n_visual < 1:
        raise NoVisualTokens("sequence has no visual tokens")
    return TokenSequence(
        tokens=hidden.tokens[: hidden.n_visual].copy(),
        n_visual=hidden.n_visual,
        n_text=0,
        visual_grid=hidden.visual_grid,
    )


def layer_norm(seq: TokenSequence, gain: np.ndarray, bias: np.ndarray) -> TokenSequence:
    """Per-token normalization: (x - mean) / sqrt(var + eps) * gain + bias."""
    gain = np.asarray(gain, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if gain.shape != (seq.width,) or bias.shape != (seq.width,):
        raise WidthMismatch("gain/bias width must match the token width")
    x = seq.tokens
    mean = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    out = (x - mean) / np.sqrt(var + LN_EPS) * gain + bias
    return TokenSequence(
        tokens=out, n_visual=seq.n_visual, n_text=seq.n_text, visual_grid=seq.visual_grid
    )


def silu(x: np.ndarray) -> np.ndarray:
    """Smooth gated nonlinearity x * sigmoid(x)."""
    return x / (1.0 + np.exp(-x))


@dataclass
class VlsaParams:
    norm_gain: np.ndarray  # (width,)
    norm_bias: np.ndarray  # (width,)
    w1: np.ndarray  # (width, hidden)
    w2: np.ndarray  # (hidden, out)
    alpha: float = 1.0
    beta: float = 0.0
    shuffle_ratio: Fraction = field(default_factory=lambda: Fraction(1, 2))


@dataclass
class DenseEmbed:
    grid: tuple[int, int]
    vectors: np.ndarray  # (h*w, dim)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.shape[0] != self.grid[0] * self.grid[1]:
            raise ValueError("vector count must equal grid area")


def vlsa_forward(hidden: TokenSequence, params: VlsaParams) -> DenseEmbed:
    """Project hidden visual tokens into a dense prompt-embedding grid.

    Pipeline: split the visual prefix, pixel-shuffle it to the prompt grid,
    layer-normalize, apply a two-layer projection with a smooth-gated
    nonlinearity, then scale and shift elementwise by alpha and beta.
    """
    visual = split_visual_tokens(hidden)
    shuffled = pixel_shuffle(tensor_from_tokens(visual), params.shuffle_ratio)
    _, h, w, c = shuffled.shape
    seq = tokens_from_tensor(shuffled)
    if params.norm_gain.shape != (c,):
        raise WidthMismatch(
            f"norm width {params.norm_gain.shape} does not match shuffled width {c}"
        )
    normed = layer_norm(seq, params.norm_gain, params.norm_bias)
    x = silu(normed.tokens @ params.w1) @ params.w2
    return DenseEmbed(grid=(h, w), vectors=params.alpha * x + params.beta)


def baseline_dense_embed(grid: tuple[int, int], embedding: np.ndarray) -> DenseEmbed:
    """Broadcast one constant vector to every grid cell."""
    embedding = np.asarray(embedding, dtype=np.float64)
    h, w = grid
    return DenseEmbed(grid=grid, vectors=np.tile(embedding, (h * w, 1)))
