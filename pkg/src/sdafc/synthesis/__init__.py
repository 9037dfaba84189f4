from .gan import (
    GanConfig,
    GeneratorNet,
    GmmSynthesizer,
    LatentSpec,
    d_loss_and_grads,
    default_gan_config,
    fit_gmm_synthesizer,
    g_loss_and_grads,
    gan_grads,
    sample_generator,
    sample_latent,
    train_local_gan,
)
from .nn import Adam, Dense, MlpNet, backward, forward, init_mlp
