"""Latent-variable generative models over encoded segments.

Four families share one training loop:

- gmvae: mixture-of-Gaussians prior; a one-layer prior network maps each
  game's one-hot label to that component's mean and variance, and the
  posterior is pulled toward its own game's component.
- cvae: standard-normal prior with the game label concatenated to both
  encoder and decoder inputs.
- cgmvae: gmvae plus a 4-bit open-side label concatenated to encoder and
  decoder inputs (the prior network still sees only the game label).
- ccvae: cvae with the open-side label appended to the game label.

The loss is per-cell categorical cross-entropy over the tile vocabulary
plus the KL term for the family, with an optional linear KL anneal.
Gradients are assembled by hand from the dense-net tapes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    CELLS_PER_SEGMENT,
    Corpus,
    Segment,
    TileGrid,
    TileVocab,
    decode_onehot,
    encode_onehot,
)
from .numerics import (
    AdamState,
    DenseNet,
    DiagGaussian,
    PlateauSchedule,
    StepSchedule,
    adam_step,
    backward,
    forward,
    init_dense,
    schedule_lr,
)

FAMILIES = ("gmvae", "cvae", "cgmvae", "ccvae")
GM_FAMILIES = ("gmvae", "cgmvae")
DIRECTIONAL_FAMILIES = ("cgmvae", "ccvae")

VAR_FLOOR = 1e-6
CHECKPOINT_MAGIC = b"BLENDWORKS-CKPT\n"
CHECKPOINT_VERSION = 1


class NonFiniteLoss(Exception):
    def __init__(self, epoch: int):
        super().__init__(f"loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class MissingDirectionalLabel(Exception):
    def __init__(self, index: int):
        super().__init__(f"segment {index} has no directional label")
        self.index = index


class VersionMismatch(Exception):
    pass


class CorruptCheckpoint(Exception):
    pass


@dataclass(frozen=True)
class ModelConfig:
    family: str
    game_count: int
    latent_dim: int
    epochs: int
    seed: int
    encoder_widths: tuple[int, ...] = (512, 256, 128)
    decoder_widths: tuple[int, ...] = (128, 256)
    batch_size: int = 32
    learning_rate: float = 1e-3
    lr_policy: str = "plateau"  # "plateau" or "step"
    lr_factor: float = 0.1
    lr_patience: int = 50
    lr_every: int = 2500
    kl_anneal_epochs: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.latent_dim <= 0 or self.game_count < 2 or self.epochs <= 0:
            raise ValueError("latent_dim > 0, game_count >= 2, epochs > 0 required")
        object.__setattr__(self, "encoder_widths", tuple(self.encoder_widths))
        object.__setattr__(self, "decoder_widths", tuple(self.decoder_widths))

    @property
    def condition_dim(self) -> int:
        dim = 0
        if self.family in ("cvae", "ccvae"):
            dim += self.game_count
        if self.family in DIRECTIONAL_FAMILIES:
            dim += 4
        return dim


def default_config(family: str, game_count: int, latent_dim: int, seed: int,
                   **overrides) -> ModelConfig:
    """Family defaults: mixture-prior models run 1000 epochs with plateau
    decay; conditional models run 10000 epochs with stepped decay and a
    2500-epoch KL anneal."""
    base = dict(family=family, game_count=game_count, latent_dim=latent_dim, seed=seed)
    if family in GM_FAMILIES:
        base.update(epochs=1000, lr_policy="plateau", lr_patience=50, kl_anneal_epochs=0)
    else:
        base.update(epochs=10000, lr_policy="step", lr_every=2500, kl_anneal_epochs=2500)
    base.update(overrides)
    return ModelConfig(**base)


@dataclass(frozen=True)
class ComponentSet:
    """Cached per-game latent Gaussians: one (mean, variance) row per game."""

    means: np.ndarray  # (k, z)
    variances: np.ndarray  # (k, z)

    def __post_init__(self):
        if self.means.shape != self.variances.shape:
            raise ValueError("means and variances must align")
        if np.any(self.variances <= 0):
            raise ValueError("component variances must be positive")

    @property
    def count(self) -> int:
        return self.means.shape[0]

    def component(self, index: int) -> DiagGaussian:
        return DiagGaussian(self.means[index], self.variances[index])


@dataclass
class ModelCheckpoint:
    config: ModelConfig
    games: tuple[str, ...]
    vocab: TileVocab
    encoder_trunk: DenseNet
    mean_head: DenseNet
    var_head: DenseNet
    decoder: DenseNet
    prior_mean: DenseNet | None = None
    prior_var: DenseNet | None = None
    components: ComponentSet | None = None
    extra: dict = field(default_factory=dict)

    @property
    def family(self) -> str:
        return self.config.family

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim

    @property
    def label_layout(self) -> dict:
        return {
            "game_bits": self.config.game_count,
            "dir_bits": 4 if self.family in DIRECTIONAL_FAMILIES else 0,
        }

    def nets(self) -> dict[str, DenseNet]:
        named = {
            "encoder_trunk": self.encoder_trunk,
            "mean_head": self.mean_head,
            "var_head": self.var_head,
            "decoder": self.decoder,
        }
        if self.prior_mean is not None:
            named["prior_mean"] = self.prior_mean
            named["prior_var"] = self.prior_var
        return named

    def trainable_params(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for net in self.nets().values():
            params.extend(net.params())
        return params


def build_model(config: ModelConfig, vocab: TileVocab, games: Sequence[str],
                rng: np.random.Generator | None = None) -> ModelCheckpoint:
    """Initialize fresh networks for a family; rng defaults to the config seed."""
    if len(games) != config.game_count:
        raise ValueError("game list must match config.game_count")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    x_dim = CELLS_PER_SEGMENT * len(vocab)
    z = config.latent_dim
    cond = config.condition_dim
    trunk_dims = [x_dim + cond, *config.encoder_widths]
    trunk = init_dense(trunk_dims, ["relu"] * len(config.encoder_widths), rng)
    mean_head = init_dense([config.encoder_widths[-1], z], ["identity"], rng)
    var_head = init_dense([config.encoder_widths[-1], z], ["softplus"], rng)
    dec_dims = [z + cond, *config.decoder_widths, x_dim]
    decoder = init_dense(dec_dims, ["relu"] * len(config.decoder_widths) + ["identity"], rng)
    ckpt = ModelCheckpoint(config, tuple(games), vocab, trunk, mean_head, var_head, decoder)
    if config.family in GM_FAMILIES:
        ckpt.prior_mean = init_dense([config.game_count, z], ["identity"], rng)
        ckpt.prior_var = init_dense([config.game_count, z], ["softplus"], rng)
        ckpt.components = extract_components(ckpt)
    return ckpt


def extract_components(ckpt: ModelCheckpoint) -> ComponentSet:
    """Evaluate the prior networks on every one-hot game label."""
    if ckpt.prior_mean is None or ckpt.prior_var is None:
        raise ValueError("model family has no prior networks")
    eye = np.eye(ckpt.config.game_count)
    means, _ = forward(ckpt.prior_mean, eye)
    raw_vars, _ = forward(ckpt.prior_var, eye)
    return ComponentSet(means, raw_vars + VAR_FLOOR)


def _condition(ckpt: ModelCheckpoint, game_labels: np.ndarray,
               dir_labels: np.ndarray | None) -> np.ndarray | None:
    parts = []
    if ckpt.family in ("cvae", "ccvae"):
        parts.append(game_labels)
    if ckpt.family in DIRECTIONAL_FAMILIES:
        if dir_labels is None:
            raise MissingDirectionalLabel(-1)
        parts.append(dir_labels)
    if not parts:
        return None
    return np.concatenate(parts, axis=1)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    return logits - m - np.log(np.exp(logits - m).sum(axis=-1, keepdims=True))


def loss_and_grads(ckpt: ModelCheckpoint, batch: np.ndarray, game_labels: np.ndarray,
                   dir_labels: np.ndarray | None = None, beta: float = 1.0,
                   eps: np.ndarray | None = None,
                   rng: np.random.Generator | None = None):
    """Mean loss over the batch and gradients for every trainable array.

    batch: (B, cells * |vocab|) one-hot rows. eps fixes the
    reparameterization noise explicitly (useful for gradient checks);
    otherwise it is drawn from rng.
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    game_labels = np.asarray(game_labels, dtype=np.float64)
    if game_labels.ndim == 1:
        game_labels = game_labels[None, :]
    if dir_labels is not None:
        dir_labels = np.asarray(dir_labels, dtype=np.float64)
        if dir_labels.ndim == 1:
            dir_labels = dir_labels[None, :]
    n = x.shape[0]
    z_dim = ckpt.latent_dim
    vocab_size = len(ckpt.vocab)

    cond = _condition(ckpt, game_labels, dir_labels)
    enc_in = x if cond is None else np.concatenate([x, cond], axis=1)
    h, trunk_tape = forward(ckpt.encoder_trunk, enc_in)
    mu_q, mean_tape = forward(ckpt.mean_head, h)
    raw_var, var_tape = forward(ckpt.var_head, h)
    var_q = raw_var + VAR_FLOOR

    if eps is None:
        if rng is None:
            raise ValueError("provide eps or rng")
        eps = rng.standard_normal((n, z_dim))
    sigma = np.sqrt(var_q)
    latent = mu_q + sigma * eps

    dec_in = latent if cond is None else np.concatenate([latent, cond], axis=1)
    logits, dec_tape = forward(ckpt.decoder, dec_in)

    logits3 = logits.reshape(n, CELLS_PER_SEGMENT, vocab_size)
    target3 = x.reshape(n, CELLS_PER_SEGMENT, vocab_size)
    logp = _log_softmax(logits3)
    rec = -(target3 * logp).sum(axis=(1, 2))

    prior_tapes = None
    if ckpt.family in GM_FAMILIES:
        mu_p, pm_tape = forward(ckpt.prior_mean, game_labels)
        raw_pv, pv_tape = forward(ckpt.prior_var, game_labels)
        var_p = raw_pv + VAR_FLOOR
        prior_tapes = (pm_tape, pv_tape)
    else:
        mu_p = np.zeros_like(mu_q)
        var_p = np.ones_like(var_q)

    diff = mu_q - mu_p
    kl = 0.5 * np.sum(np.log(var_p) - np.log(var_q) + var_q / var_p
                      + diff**2 / var_p - 1.0, axis=1)
    loss = float(np.mean(rec + beta * kl))

    # backward: reconstruction path
    dlogits = (np.exp(logp) - target3).reshape(n, -1) / n
    dec_grads = backward(ckpt.decoder, dec_tape, dlogits)
    dlatent = dec_grads.wrt_input[:, :z_dim]
    dmu_q = dlatent.copy()
    dvar_q = dlatent * eps / (2.0 * sigma)

    # backward: KL path
    s = beta / n
    dmu_q += s * diff / var_p
    dvar_q += s * 0.5 * (1.0 / var_p - 1.0 / var_q)

    mean_grads = backward(ckpt.mean_head, mean_tape, dmu_q)
    var_grads = backward(ckpt.var_head, var_tape, dvar_q)
    trunk_grads = backward(ckpt.encoder_trunk, trunk_tape,
                           mean_grads.wrt_input + var_grads.wrt_input)

    grads = trunk_grads.params() + mean_grads.params() + var_grads.params() \
        + dec_grads.params()
    if prior_tapes is not None:
        dmu_p = -s * diff / var_p
        dvar_p = s * (0.5 / var_p - 0.5 * (var_q + diff**2) / var_p**2)
        pm_grads = backward(ckpt.prior_mean, prior_tapes[0], dmu_p)
        pv_grads = backward(ckpt.prior_var, prior_tapes[1], dvar_p)
        grads += pm_grads.params() + pv_grads.params()
    return loss, grads


def gmvae_loss(ckpt: ModelCheckpoint, batch: np.ndarray, labels: np.ndarray,
               eps: np.ndarray | None = None, rng: np.random.Generator | None = None):
    """Reconstruction plus KL against each sample's own game component."""
    if ckpt.family not in GM_FAMILIES:
        raise ValueError(f"gmvae_loss needs a mixture-prior family, got {ckpt.family}")
    return loss_and_grads(ckpt, batch, labels, beta=1.0, eps=eps, rng=rng)


def cvae_loss(ckpt: ModelCheckpoint, batch: np.ndarray, labels: np.ndarray,
              beta: float = 1.0, eps: np.ndarray | None = None,
              rng: np.random.Generator | None = None):
    """Reconstruction plus annealed KL against the standard normal."""
    if ckpt.family in GM_FAMILIES:
        raise ValueError(f"cvae_loss needs a conditional family, got {ckpt.family}")
    return loss_and_grads(ckpt, batch, labels, beta=beta, eps=eps, rng=rng)


def kl_anneal_beta(epoch: int, span: int) -> float:
    """Linear 0 -> 1 ramp over the first `span` epochs; 1.0 when span is 0."""
    if span <= 0:
        return 1.0
    return min(1.0, epoch / span)


def encode_corpus(corpus: Corpus) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """One-hot matrix, game-label matrix, and (when present) direction matrix."""
    xs = np.stack([encode_onehot(seg, corpus.vocab) for seg in corpus.segments])
    labels = np.array([seg.game_label for seg in corpus.segments], dtype=np.float64)
    dirs = None
    if all(seg.dir_label is not None for seg in corpus.segments):
        dirs = np.array([seg.dir_label for seg in corpus.segments], dtype=np.float64)
    return xs, labels, dirs


def _train(corpus: Corpus, config: ModelConfig, need_dirs: bool) -> ModelCheckpoint:
    if len(corpus.games) != config.game_count:
        raise ValueError(f"corpus has {len(corpus.games)} games, config expects "
                         f"{config.game_count}")
    if need_dirs:
        for i, seg in enumerate(corpus.segments):
            if seg.dir_label is None:
                raise MissingDirectionalLabel(i)
    rng = np.random.default_rng(config.seed)
    ckpt = build_model(config, corpus.vocab, corpus.games, rng)
    xs, labels, dirs = encode_corpus(corpus)
    use_dirs = dirs if need_dirs else None

    params = ckpt.trainable_params()
    adam = AdamState.for_params(params, learning_rate=config.learning_rate)
    if config.lr_policy == "plateau":
        policy = PlateauSchedule(factor=config.lr_factor, patience=config.lr_patience)
    elif config.lr_policy == "step":
        policy = StepSchedule(factor=config.lr_factor, every_n=config.lr_every)
    else:
        raise ValueError(f"unknown lr policy {config.lr_policy!r}")

    n = xs.shape[0]
    history: list[float] = []
    for epoch in range(config.epochs):
        beta = 1.0 if config.family in GM_FAMILIES else \
            kl_anneal_beta(epoch, config.kl_anneal_epochs)
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            eps = rng.standard_normal((len(idx), config.latent_dim))
            loss, grads = loss_and_grads(
                ckpt, xs[idx], labels[idx],
                None if use_dirs is None else use_dirs[idx],
                beta=beta, eps=eps)
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch)
            adam_step(params, grads, adam)
            epoch_loss += loss * len(idx)
        history.append(epoch_loss / n)
        schedule_lr(adam, policy, history)
    if config.family in GM_FAMILIES:
        ckpt.components = extract_components(ckpt)
    ckpt.extra["loss_history"] = [round(v, 10) for v in history]
    return ckpt


def train_gmvae(corpus: Corpus, config: ModelConfig) -> ModelCheckpoint:
    if config.family != "gmvae":
        raise ValueError("config.family must be 'gmvae'")
    return _train(corpus, config, need_dirs=False)


def train_cvae(corpus: Corpus, config: ModelConfig) -> ModelCheckpoint:
    if config.family != "cvae":
        raise ValueError("config.family must be 'cvae'")
    return _train(corpus, config, need_dirs=False)


def train_conditional_directional(corpus: Corpus, config: ModelConfig) -> ModelCheckpoint:
    if config.family not in DIRECTIONAL_FAMILIES:
        raise ValueError("config.family must be 'cgmvae' or 'ccvae'")
    return _train(corpus, config, need_dirs=True)


def train(corpus: Corpus, config: ModelConfig) -> ModelCheckpoint:
    if config.family in DIRECTIONAL_FAMILIES:
        return train_conditional_directional(corpus, config)
    if config.family == "gmvae":
        return train_gmvae(corpus, config)
    return train_cvae(corpus, config)


def decode_grids(ckpt: ModelCheckpoint, latents: np.ndarray,
                 cond: np.ndarray | None = None) -> list[TileGrid]:
    """Per-cell argmax decode of latent vectors (plus decode-time condition)."""
    latents = np.asarray(latents, dtype=np.float64)
    if latents.ndim == 1:
        latents = latents[None, :]
    dec_in = latents if cond is None else np.concatenate([latents, cond], axis=1)
    logits, _ = forward(ckpt.decoder, dec_in)
    return [decode_onehot(row, ckpt.vocab) for row in logits]


def posterior(ckpt: ModelCheckpoint, batch: np.ndarray, game_labels: np.ndarray,
              dir_labels: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Encoder means and variances for a batch of one-hot rows."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    gl = np.asarray(game_labels, dtype=np.float64)
    if gl.ndim == 1:
        gl = gl[None, :]
    dl = None
    if dir_labels is not None:
        dl = np.asarray(dir_labels, dtype=np.float64)
        if dl.ndim == 1:
            dl = dl[None, :]
    cond = _condition(ckpt, gl, dl)
    enc_in = x if cond is None else np.concatenate([x, cond], axis=1)
    h, _ = forward(ckpt.encoder_trunk, enc_in)
    mu, _ = forward(ckpt.mean_head, h)
    raw_var, _ = forward(ckpt.var_head, h)
    return mu, raw_var + VAR_FLOOR


def save_checkpoint(ckpt: ModelCheckpoint, path: str | Path) -> None:
    """Versioned container: JSON header plus little-endian float64 arrays."""
    arrays: list[tuple[str, np.ndarray]] = []
    net_meta: dict[str, dict] = {}
    for name, net in ckpt.nets().items():
        dims = [net.input_dim] + [layer.weights.shape[1] for layer in net.layers]
        net_meta[name] = {"dims": dims,
                          "activations": [layer.activation for layer in net.layers]}
        for i, layer in enumerate(net.layers):
            arrays.append((f"{name}.layer{i}.weights", layer.weights))
            arrays.append((f"{name}.layer{i}.bias", layer.bias))
    if ckpt.components is not None:
        arrays.append(("components.means", ckpt.components.means))
        arrays.append(("components.variances", ckpt.components.variances))
    header = {
        "config": asdict(ckpt.config),
        "games": list(ckpt.games),
        "vocab": ckpt.vocab.to_config(),
        "label_layout": ckpt.label_layout,
        "nets": net_meta,
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in arrays],
        "extra": ckpt.extra,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise CorruptCheckpoint("bad magic")
    offset = len(CHECKPOINT_MAGIC)
    try:
        (version,) = struct.unpack_from("<I", data, offset)
        offset += 4
        (header_len,) = struct.unpack_from("<Q", data, offset)
        offset += 8
    except struct.error as exc:
        raise CorruptCheckpoint("truncated header") from exc
    if version != CHECKPOINT_VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    if offset + header_len > len(data):
        raise CorruptCheckpoint("truncated header")
    try:
        header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint("unreadable header") from exc
    offset += header_len

    raw = header["config"]
    raw["encoder_widths"] = tuple(raw["encoder_widths"])
    raw["decoder_widths"] = tuple(raw["decoder_widths"])
    config = ModelConfig(**raw)
    vocab = TileVocab.from_config(header["vocab"])

    loaded: dict[str, np.ndarray] = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(data):
            raise CorruptCheckpoint(f"truncated array {spec['name']}")
        arr = np.frombuffer(data[offset : offset + nbytes], dtype="<f8").reshape(shape)
        loaded[spec["name"]] = arr.astype(np.float64)
        offset += nbytes

    from .numerics import DenseLayer  # local to avoid polluting module surface

    def rebuild(name: str) -> DenseNet:
        meta = header["nets"][name]
        layers = []
        for i, act in enumerate(meta["activations"]):
            layers.append(DenseLayer(loaded[f"{name}.layer{i}.weights"],
                                     loaded[f"{name}.layer{i}.bias"], act))
        return DenseNet(layers)

    ckpt = ModelCheckpoint(
        config=config,
        games=tuple(header["games"]),
        vocab=vocab,
        encoder_trunk=rebuild("encoder_trunk"),
        mean_head=rebuild("mean_head"),
        var_head=rebuild("var_head"),
        decoder=rebuild("decoder"),
        extra=header.get("extra", {}),
    )
    if "prior_mean" in header["nets"]:
        ckpt.prior_mean = rebuild("prior_mean")
        ckpt.prior_var = rebuild("prior_var")
        ckpt.components = ComponentSet(loaded["components.means"],
                                       loaded["components.variances"])
    return ckpt
