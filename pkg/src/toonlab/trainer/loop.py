"""Warm-up and adversarial training loops, checkpoint plumbing, stylization.

One global step counter runs through the warm-up ("init") phase and the
adversarial phase; the cyclic schedule spans both.  A checkpoint written
after step t captures weights, optimizer moments, batchnorm stats, and the
loop progress, so resuming reproduces an uninterrupted run bit for bit on the
same platform (wall-clock fields are deliberately kept out of checkpoints).
"""

from __future__ import annotations

import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from ..imageprep import RasterImage, image_to_tensor, tensor_to_image
from ..losses import (
    FeatureExtractor,
    LossWeights,
    bce_logits,
    bce_logits_grad,
    content_loss_with_grad,
    total_loss,
)
from ..models import (
    CheckpointError,
    DiscriminatorNet,
    GeneratorNet,
    load_checkpoint,
    save_checkpoint,
)
from ..nncore import LrSchedule, NumericError, adamw_step, cyclic_lr
from ..nncore.ops import ShapeError
from .config import ConfigError, TrainConfig
from .data import ImageFolder, steps_per_epoch

STATS_CSV_HEADER = "epoch,d_loss,g_adv,g_con,total,wall_time"


@dataclass
class EpochStats:
    epoch: int
    d_loss: float
    g_adv: float
    g_con: float
    total: float
    wall_time: float

    def csv_line(self) -> str:
        return (f"{self.epoch},{self.d_loss:.6f},{self.g_adv:.6f},"
                f"{self.g_con:.6f},{self.total:.6f},{self.wall_time:.3f}")


@dataclass
class StepStats:
    d_loss: float
    g_adv: float
    g_con: float
    total: float


@dataclass
class TrainingBatch:
    """Aligned photo / cartoon / edge-smoothed batches for one step."""

    p: np.ndarray
    c: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        if not (self.p.shape == self.c.shape == self.e.shape):
            raise ShapeError(
                f"batch shapes disagree: p{self.p.shape} c{self.c.shape} e{self.e.shape}")


def _step_params(net, lr: float, weight_decay: float) -> None:
    for p in net.parameters():
        adamw_step(p, lr, weight_decay=weight_decay)


def _require_finite(value: float, network: str) -> float:
    if not np.isfinite(value):
        raise NumericError(f"non-finite loss in {network}")
    return value


def content_step(g: GeneratorNet, f: FeatureExtractor, p: np.ndarray,
                 lr: float, weight_decay: float) -> float:
    """One reconstruction update: minimize content distance of G(p) to p."""
    gp = g.forward(p, train=True)
    loss, dgp = content_loss_with_grad(f, p, gp)
    _require_finite(loss, "generator")
    g.zero_grad()
    g.backward(dgp)
    _step_params(g, lr, weight_decay)
    return loss


def gan_step(
    g: GeneratorNet,
    d: DiscriminatorNet,
    batch: TrainingBatch,
    cfg: TrainConfig,
    t: int,
    f: FeatureExtractor,
    sched: LrSchedule,
    lr: float | None = None,
) -> StepStats:
    """One adversarial step: update D (G frozen), then G (D frozen)."""
    if lr is None:
        lr = cyclic_lr(t, sched)
    weights = LossWeights(cfg.omega)

    gp = g.forward(batch.p, train=True)

    # --- discriminator update; gp is a constant here ---
    d.zero_grad()
    d_c = d.forward(batch.c, train=True)
    loss_c = bce_logits(d_c, 1)
    d.backward(bce_logits_grad(d_c, 1))
    d_e = d.forward(batch.e, train=True)
    loss_e = bce_logits(d_e, 0)
    d.backward(bce_logits_grad(d_e, 0))
    d_gp = d.forward(gp, train=True)
    loss_gp = bce_logits(d_gp, 0)
    d.backward(bce_logits_grad(d_gp, 0))
    d_loss = _require_finite(loss_c + loss_e + loss_gp, "discriminator")
    _step_params(d, lr, cfg.weight_decay)

    # --- generator update against the freshly stepped discriminator ---
    g.zero_grad()
    d_gp2 = d.forward(gp, train=True)
    g_adv = _require_finite(bce_logits(d_gp2, 1), "generator")
    dgp_adv = d.backward(bce_logits_grad(d_gp2, 1))  # D grads dirty; zeroed next step
    g_con, dgp_con = content_loss_with_grad(f, batch.p, gp)
    _require_finite(g_con, "generator")
    g.backward(dgp_adv + np.asarray(cfg.omega, dtype=dgp_con.dtype) * dgp_con)
    _step_params(g, lr, cfg.weight_decay)

    return StepStats(
        d_loss=d_loss,
        g_adv=g_adv,
        g_con=g_con,
        total=total_loss(g_adv, g_con, weights),
    )


def init_phase(
    g: GeneratorNet,
    photos: ImageFolder,
    cfg: TrainConfig,
    f: FeatureExtractor | None = None,
    sched: LrSchedule | None = None,
    on_step=None,
) -> list[EpochStats]:
    """Warm-up: train the generator alone on reconstruction for init_epochs."""
    if f is None:
        f = FeatureExtractor(seed=cfg.seed)
    spe = steps_per_epoch(len(photos), cfg.batch_size)
    if sched is None:
        sched = LrSchedule(cfg.base_lr, cfg.max_lr, half_cycle=spe)
    stats: list[EpochStats] = []
    t = 0
    for epoch in range(cfg.init_epochs):
        started = time.monotonic()
        con_sum = 0.0
        for i in range(spe):
            p = photos.batch(epoch, i, cfg.batch_size)
            loss = content_step(g, f, p, cyclic_lr(t, sched), cfg.weight_decay)
            con_sum += loss
            if on_step is not None:
                on_step(t, loss)
            t += 1
        mean_con = con_sum / spe
        stats.append(EpochStats(epoch, 0.0, 0.0, mean_con, mean_con,
                                time.monotonic() - started))
    return stats


def _config_fingerprint(cfg: TrainConfig) -> dict:
    keys = ("seed", "batch_size", "init_epochs", "gan_epochs", "base_lr",
            "max_lr", "weight_decay", "omega", "image_size")
    d = asdict(cfg)
    return {k: d[k] for k in keys}


class _Accumulator:
    def __init__(self, d=0.0, ga=0.0, gc=0.0, tot=0.0, count=0):
        self.d, self.ga, self.gc, self.tot, self.count = d, ga, gc, tot, count

    def add(self, s: StepStats):
        self.d += s.d_loss
        self.ga += s.g_adv
        self.gc += s.g_con
        self.tot += s.total
        self.count += 1

    def to_dict(self):
        return {"d": self.d, "ga": self.ga, "gc": self.gc, "tot": self.tot,
                "count": self.count}

    @staticmethod
    def from_dict(d):
        return _Accumulator(d["d"], d["ga"], d["gc"], d["tot"], d["count"])

    def epoch_stats(self, epoch: int, wall: float) -> EpochStats:
        n = max(1, self.count)
        return EpochStats(epoch, self.d / n, self.ga / n, self.gc / n,
                          self.tot / n, wall)


def train(
    g: GeneratorNet,
    d: DiscriminatorNet,
    cfg: TrainConfig,
    out_dir,
    resume_from=None,
    echo: bool = True,
    extractor: FeatureExtractor | None = None,
) -> tuple[str, list[EpochStats]]:
    """Full run: warm-up epochs, then adversarial epochs, with checkpoints.

    Returns the final checkpoint path and the per-epoch stats (length
    init_epochs + gan_epochs).  Resuming from a checkpoint continues the loop
    exactly where it stopped.  The content extractor defaults to the seeded
    random stack; pass one preloaded from a checkpoint to override.
    """
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    photos = ImageFolder(cfg.photo_dir, cfg.image_size, cfg.seed, stream_id=0)
    cartoons = ImageFolder(cfg.cartoon_dir, cfg.image_size, cfg.seed, stream_id=1)
    smoothed = ImageFolder(cfg.smoothed_dir, cfg.image_size, cfg.seed, stream_id=2)

    spe = steps_per_epoch(len(photos), cfg.batch_size)
    spe_c = steps_per_epoch(len(cartoons), cfg.batch_size)
    spe_e = steps_per_epoch(len(smoothed), cfg.batch_size)
    sched = LrSchedule(cfg.base_lr, cfg.max_lr, half_cycle=spe)
    f = extractor if extractor is not None else FeatureExtractor(seed=cfg.seed)

    init_steps = cfg.init_epochs * spe
    total_steps = init_steps + cfg.gan_epochs * spe

    start_t = 0
    acc = _Accumulator()
    stats: list[EpochStats] = []
    if resume_from is not None:
        nets, meta = load_checkpoint(resume_from)
        if meta.get("config") != _config_fingerprint(cfg):
            raise ConfigError("resume checkpoint was written with a different configuration")
        g_loaded = nets.get("generator")
        d_loaded = nets.get("discriminator")
        if g_loaded is None or d_loaded is None:
            raise CheckpointError("resume checkpoint must hold generator and discriminator")
        # adopt the loaded nets' state into the caller's instances
        for target, source in ((g, g_loaded), (d, d_loaded)):
            for (_, pt), (_, ps) in zip(target.named_parameters(), source.named_parameters()):
                pt.value[...] = ps.value
                pt.m[...] = ps.m
                pt.v[...] = ps.v
                pt.step_count = ps.step_count
            for (_, bt), (_, bs) in zip(target.named_buffers(), source.named_buffers()):
                bt[...] = bs
        progress = meta["progress"]
        start_t = progress["next_t"]
        acc = _Accumulator.from_dict(progress["acc"])
        stats = [EpochStats(wall_time=0.0, **row) for row in progress["stats"]]

    stats_path = os.path.join(out_dir, "stats.csv")
    new_stats_file = not os.path.exists(stats_path)
    stats_fh = open(stats_path, "a", encoding="utf-8")
    if new_stats_file:
        stats_fh.write(STATS_CSV_HEADER + "\n")

    def emit(row: EpochStats) -> None:
        line = row.csv_line()
        stats_fh.write(line + "\n")
        stats_fh.flush()
        if echo:
            print(line, flush=True)

    def save(t_done: int, path) -> None:
        meta = {
            "seed": cfg.seed,
            "config": _config_fingerprint(cfg),
            "schedule": {"base_lr": sched.base_lr, "max_lr": sched.max_lr,
                         "half_cycle": sched.half_cycle, "policy": sched.policy},
            "progress": {
                "next_t": t_done + 1,
                "epoch": (t_done + 1) // spe,
                "acc": acc.to_dict(),
                "stats": [{"epoch": s.epoch, "d_loss": s.d_loss, "g_adv": s.g_adv,
                           "g_con": s.g_con, "total": s.total} for s in stats],
            },
        }
        save_checkpoint({"generator": g, "discriminator": d}, meta, path)

    final_path = os.path.join(out_dir, "ckpt_final.cgwt")
    try:
        epoch_started = time.monotonic()
        for t in range(start_t, total_steps):
            epoch, i = divmod(t, spe)
            if i == 0:
                epoch_started = time.monotonic()
            if t < init_steps:
                p = photos.batch(epoch, i, cfg.batch_size)
                loss = content_step(g, f, p, cyclic_lr(t, sched), cfg.weight_decay)
                acc.add(StepStats(0.0, 0.0, loss, loss))
            else:
                t_gan = t - init_steps
                ec, ic = divmod(t_gan, spe_c)
                ee, ie = divmod(t_gan, spe_e)
                batch = TrainingBatch(
                    p=photos.batch(epoch, i, cfg.batch_size),
                    c=cartoons.batch(ec, ic, cfg.batch_size),
                    e=smoothed.batch(ee, ie, cfg.batch_size),
                )
                acc.add(gan_step(g, d, batch, cfg, t, f, sched))
            if i == spe - 1:
                stats.append(acc.epoch_stats(epoch, time.monotonic() - epoch_started))
                emit(stats[-1])
                acc = _Accumulator()
            if (t + 1) % cfg.checkpoint_every == 0:
                save(t, os.path.join(out_dir, f"ckpt_step{t + 1:08d}.cgwt"))
        save(total_steps - 1, final_path)
    finally:
        stats_fh.close()
    return final_path, stats


def stylize_with(g: GeneratorNet, img: RasterImage) -> RasterImage:
    """Eval-mode generator pass; output dimensions equal input dimensions."""
    t = image_to_tensor(img)
    h, w = t.shape[2], t.shape[3]
    pad_h = (-h) % 4
    pad_w = (-w) % 4
    if pad_h or pad_w:
        t = np.pad(t, ((0, 0), (0, 0), (0, pad_h), (0, pad_w)), mode="edge")
    y = g.forward(t, train=False)
    return tensor_to_image(y[:, :, :h, :w])


def stylize(ckpt_path, img: RasterImage) -> RasterImage:
    """Load a generator checkpoint and cartoonize one image."""
    nets, _ = load_checkpoint(ckpt_path)
    if "generator" not in nets:
        raise CheckpointError(f"{ckpt_path}: checkpoint holds no generator")
    return stylize_with(nets["generator"], img)
