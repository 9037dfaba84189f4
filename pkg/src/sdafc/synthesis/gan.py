"""Per-client GAN with a one-hot + Gaussian latent, and a Gaussian-mixture stand-in.

The discriminator maximises ``E log D(x) + E log(1 - D(G(e_u, z)))``; the
generator minimises the non-saturating surrogate ``-E log D(G(e_u, z))``,
which has the same fixed points but does not stall while D is winning.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .. import rng as _rng
from ..clustering import kmeans_fit
from ..errors import TrainingDivergedError
from .nn import Adam, MlpNet, backward, forward, init_mlp

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class LatentSpec:
    k_categories: int
    noise_dim: int

    def __post_init__(self):
        if self.k_categories < 1 or self.noise_dim < 1:
            raise ValueError("latent needs k_categories >= 1 and noise_dim >= 1")

    @property
    def dim(self):
        return self.k_categories + self.noise_dim


@dataclass(frozen=True)
class GanConfig:
    latent: LatentSpec
    g_hidden: tuple = (64, 128)
    d_hidden: tuple = (128, 64)
    learning_rate: float = 2e-4
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    batch_size: int = 64
    epochs: int = 500
    seed: int = 0
    d_steps: int = 1
    g_steps: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0 or self.d_steps < 1 or self.g_steps < 1:
            raise ValueError("batch_size, d_steps, g_steps must be >= 1 and epochs >= 0")

    def to_dict(self):
        return {
            "k_categories": self.latent.k_categories,
            "noise_dim": self.latent.noise_dim,
            "g_hidden": list(self.g_hidden),
            "d_hidden": list(self.d_hidden),
            "learning_rate": self.learning_rate,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "d_steps": self.d_steps,
            "g_steps": self.g_steps,
        }


def default_gan_config(d, k, **overrides):
    """Defaults for a d-dimensional dataset with k clusters: noise_dim 8 up to
    16 features, 32 beyond."""
    latent = LatentSpec(k, 8 if d <= 16 else 32)
    return replace(GanConfig(latent), **overrides)


@dataclass
class GeneratorNet:
    """Trained generator: the payload a client uploads."""

    net: MlpNet
    latent: LatentSpec
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.net.input_dim != self.latent.dim:
            raise ValueError(f"generator input {self.net.input_dim} != latent dim {self.latent.dim}")

    @property
    def d(self):
        return self.net.output_dim

    def sample(self, n, seed):
        return sample_generator(self, n, seed)

    def to_dict(self):
        return {
            "latent": {"k": self.latent.k_categories, "noise_dim": self.latent.noise_dim},
            **self.net.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc):
        latent = LatentSpec(int(doc["latent"]["k"]), int(doc["latent"]["noise_dim"]))
        return cls(MlpNet.from_dict(doc), latent)


def sample_latent(latent, n, gen):
    """One-hot category (uniform over k) concatenated with standard normal noise."""
    cats = gen.integers(0, latent.k_categories, size=n)
    z = np.zeros((n, latent.dim))
    z[np.arange(n), cats] = 1.0
    z[:, latent.k_categories:] = gen.standard_normal((n, latent.noise_dim))
    return z, cats


def build_networks(cfg, d, gen):
    k = cfg.latent
    G = init_mlp([k.dim, *cfg.g_hidden, d], ["relu"] * len(cfg.g_hidden) + ["sigmoid"], gen)
    D = init_mlp([d, *cfg.d_hidden, 1], ["relu"] * len(cfg.d_hidden) + ["sigmoid"], gen)
    return G, D


def _check_discriminator(D):
    if D.layers[-1].activation != "sigmoid" or D.output_dim != 1:
        raise ValueError("discriminator must end in a single sigmoid unit")


def d_loss_and_grads(G, D, real, latent_batch):
    """Discriminator loss ``-(mean log D(x) + mean log(1 - D(G(z))))`` and its gradient."""
    _check_discriminator(D)
    fake = forward(G, latent_batch)
    d_real, c_real = forward(D, real, keep=True)
    d_fake, c_fake = forward(D, fake, keep=True)
    nr, nf = len(real), len(fake)
    pr = np.maximum(d_real, LOG_FLOOR)
    pf = np.maximum(1.0 - d_fake, LOG_FLOOR)
    loss = -(np.mean(np.log(pr)) + np.mean(np.log(pf)))
    # floored terms are constant, so they pass no gradient
    g_real = np.where(d_real > LOG_FLOOR, -1.0 / (nr * pr), 0.0)
    g_fake = np.where(1.0 - d_fake > LOG_FLOOR, 1.0 / (nf * pf), 0.0)
    grads_r, _ = backward(D, c_real, g_real)
    grads_f, _ = backward(D, c_fake, g_fake)
    return float(loss), [a + b for a, b in zip(grads_r, grads_f)]


def g_loss_and_grads(G, D, latent_batch):
    """Non-saturating generator loss ``-mean log D(G(z))`` and its gradient w.r.t. G."""
    _check_discriminator(D)
    fake, c_g = forward(G, latent_batch, keep=True)
    d_fake, c_d = forward(D, fake, keep=True)
    p = np.maximum(d_fake, LOG_FLOOR)
    loss = -np.mean(np.log(p))
    g_out = np.where(d_fake > LOG_FLOOR, -1.0 / (len(fake) * p), 0.0)
    _, g_fake = backward(D, c_d, g_out)
    grads, _ = backward(G, c_g, g_fake)
    return float(loss), grads


def gan_grads(G, D, real_batch, latent_batch):
    """``(grad_G, grad_D)``: gradients of the generator and discriminator losses.

    Stepping against ``grad_D`` ascends the discriminator's objective.
    """
    _, grad_d = d_loss_and_grads(G, D, real_batch, latent_batch)
    _, grad_g = g_loss_and_grads(G, D, latent_batch)
    return grad_g, grad_d


def train_local_gan(X_local, cfg):
    """Train a generator on one client's rows with alternating Adam updates.

    Each epoch visits a fresh shuffle in mini-batches; per batch D takes
    ``cfg.d_steps`` updates and then G takes ``cfg.g_steps``. Everything random
    is drawn from ``cfg.seed``, so equal inputs give bitwise-equal generators.
    """
    X = np.asarray(X_local, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("need a non-empty local data matrix")
    if X.min() < -1e-9 or X.max() > 1 + 1e-9:
        raise ValueError("local data must be scaled into [0, 1] before GAN training")
    gen = _rng.make_rng(cfg.seed, _rng.GAN_TRAIN)
    G, D = build_networks(cfg, X.shape[1], gen)
    opt_g = Adam(G.params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2)
    opt_d = Adam(D.params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2)

    history = []
    n = len(X)
    for epoch in range(cfg.epochs):
        order = gen.permutation(n)
        d_losses, g_losses = [], []
        for start in range(0, n, cfg.batch_size):
            real = X[order[start: start + cfg.batch_size]]
            b = len(real)
            for _ in range(cfg.d_steps):
                z, _ = sample_latent(cfg.latent, b, gen)
                d_loss, grads = d_loss_and_grads(G, D, real, z)
                opt_d.step(grads)
            for _ in range(cfg.g_steps):
                z, _ = sample_latent(cfg.latent, b, gen)
                g_loss, grads = g_loss_and_grads(G, D, z)
                opt_g.step(grads)
            d_losses.append(d_loss)
            g_losses.append(g_loss)
        d_mean, g_mean = float(np.mean(d_losses)), float(np.mean(g_losses))
        if not (np.isfinite(d_mean) and np.isfinite(g_mean)):
            raise TrainingDivergedError(epoch)
        history.append((d_mean, g_mean))
    return GeneratorNet(G, cfg.latent, history)


def sample_generator(gen_net, n, seed):
    """Draw ``n`` synthetic rows from a trained generator."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    gen = _rng.make_rng(seed, _rng.GAN_SAMPLE)
    z, _ = sample_latent(gen_net.latent, n, gen)
    return forward(gen_net.net, z)


@dataclass
class GmmSynthesizer:
    """Diagonal Gaussian mixture with the same ``sample(n, seed)`` surface as a generator."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    @property
    def d(self):
        return self.means.shape[1]

    def sample(self, n, seed):
        if n < 1:
            raise ValueError("sample size must be >= 1")
        gen = _rng.make_rng(seed, _rng.GAN_SAMPLE)
        comp = gen.choice(len(self.weights), size=n, p=self.weights)
        noise = gen.standard_normal((n, self.d))
        return self.means[comp] + np.sqrt(self.variances[comp]) * noise

    def to_dict(self):
        return {"weights": self.weights.tolist(), "means": self.means.tolist(), "variances": self.variances.tolist()}


def fit_gmm_synthesizer(X_local, k, seed=0, var_floor=1e-6):
    """k-means seeding followed by one pass of per-cluster weight/mean/variance."""
    X = np.asarray(X_local, dtype=float)
    if len(X) < k:
        raise ValueError(f"need at least k={k} rows, got {len(X)}")
    fit = kmeans_fit(X, k, seed=seed)
    weights, means, variances = [], [], []
    for j in range(k):
        rows = X[fit.labels == j]
        if len(rows) == 0:
            continue
        weights.append(len(rows) / len(X))
        means.append(rows.mean(axis=0))
        variances.append(np.maximum(rows.var(axis=0), var_floor))
    return GmmSynthesizer(np.array(weights), np.array(means), np.array(variances))
