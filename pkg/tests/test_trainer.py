"""Data streaming, config file, gan_step contracts, resume, stylize."""

import hashlib
import os

import numpy as np
import pytest

from conftest import make_dataset_dirs, synth_photo
from toonlab.imageprep import from_array, write_png
from toonlab.losses import FeatureExtractor
from toonlab.models import build_discriminator, build_generator, load_checkpoint
from toonlab.nncore import LrSchedule, NumericError
from toonlab.nncore.ops import ShapeError
from toonlab.trainer import (
    ConfigError,
    ImageFolder,
    TrainConfig,
    TrainingBatch,
    gan_step,
    init_phase,
    parse_config,
    steps_per_epoch,
    stylize,
    stylize_with,
    train,
    write_config,
)
from toonlab.trainer.loop import STATS_CSV_HEADER

SIZE = 16


@pytest.fixture
def dataset_dirs(tmp_path, rng):
    return make_dataset_dirs(tmp_path, rng, n=8, size=SIZE)


def small_cfg(dirs, **overrides):
    photo, cartoon, smoothed = dirs
    base = dict(batch_size=2, init_epochs=1, gan_epochs=1, base_lr=1e-4, max_lr=1e-3,
                seed=7, image_size=SIZE, checkpoint_every=2,
                photo_dir=str(photo), cartoon_dir=str(cartoon), smoothed_dir=str(smoothed))
    base.update(overrides)
    return TrainConfig(**base).validate()


class TestImageFolder:
    def test_drop_last_batching(self, tmp_path, rng):
        d = tmp_path / "three"
        d.mkdir()
        for i in range(3):
            write_png(synth_photo(rng, SIZE), d / f"{i}.png")
        folder = ImageFolder(str(d), SIZE, seed=0)
        assert steps_per_epoch(len(folder), 2) == 1
        batches = list(folder.iter_epoch(0, 2))
        assert len(batches) == 1
        assert batches[0].shape == (2, 3, SIZE, SIZE)

    def test_same_seed_same_epoch_identical(self, dataset_dirs):
        photo_dir = dataset_dirs[0]
        a = ImageFolder(str(photo_dir), SIZE, seed=3)
        b = ImageFolder(str(photo_dir), SIZE, seed=3)
        assert np.array_equal(a.batch(2, 0, 4), b.batch(2, 0, 4))

    def test_epoch_orders_differ(self, dataset_dirs):
        folder = ImageFolder(str(dataset_dirs[0]), SIZE, seed=3)
        o0, _ = folder.epoch_plan(0, 4)
        o1, _ = folder.epoch_plan(1, 4)
        assert list(o0) != list(o1)

    def test_values_normalized(self, dataset_dirs):
        folder = ImageFolder(str(dataset_dirs[0]), SIZE, seed=0)
        batch = folder.batch(0, 0, 4)
        assert batch.dtype == np.float32
        assert batch.min() >= -1.0 and batch.max() <= 1.0

    def test_tiny_dataset_recycles_into_one_batch(self, tmp_path, rng):
        d = tmp_path / "one"
        d.mkdir()
        write_png(synth_photo(rng, SIZE), d / "only.png")
        folder = ImageFolder(str(d), SIZE, seed=0)
        batch = folder.batch(0, 0, 2, augment=False)
        assert batch.shape == (2, 3, SIZE, SIZE)
        assert np.array_equal(batch[0], batch[1])

    def test_empty_dir_rejected(self, tmp_path):
        d = tmp_path / "empty"
        d.mkdir()
        with pytest.raises(ConfigError):
            ImageFolder(str(d), SIZE, seed=0)

    def test_undecodable_files_skipped_with_count(self, tmp_path, rng, caplog):
        d = tmp_path / "mixed"
        d.mkdir()
        write_png(synth_photo(rng, SIZE), d / "good.png")
        (d / "broken.png").write_bytes(b"\x89PNG garbage")
        with caplog.at_level("WARNING"):
            folder = ImageFolder(str(d), SIZE, seed=0)
        assert len(folder) == 1
        assert folder.skipped_count == 1


class TestConfigFile:
    def test_round_trip(self, tmp_path, dataset_dirs):
        cfg = small_cfg(dataset_dirs)
        path = tmp_path / "train.cfg"
        write_config(cfg, path)
        assert parse_config(path) == cfg

    def test_comments_and_spacing(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# comment\nbatch_size = 4\n\nseed=9  # inline\n")
        cfg = parse_config(path)
        assert cfg.batch_size == 4 and cfg.seed == 9

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("battch_size = 4\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_invalid_values_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("batch_size = 1\n")
        with pytest.raises(ConfigError):
            parse_config(path)


def _weights_digest(net) -> str:
    h = hashlib.sha256()
    for _, p in net.named_parameters():
        h.update(p.value.tobytes())
    for _, b in net.named_buffers():
        h.update(b.tobytes())
    return h.hexdigest()


def _first_batch(dirs, cfg):
    photos = ImageFolder(cfg.photo_dir, cfg.image_size, cfg.seed, 0)
    cartoons = ImageFolder(cfg.cartoon_dir, cfg.image_size, cfg.seed, 1)
    smoothed = ImageFolder(cfg.smoothed_dir, cfg.image_size, cfg.seed, 2)
    return TrainingBatch(p=photos.batch(0, 0, cfg.batch_size),
                         c=cartoons.batch(0, 0, cfg.batch_size),
                         e=smoothed.batch(0, 0, cfg.batch_size))


class TestGanStep:
    def test_lr_zero_leaves_weights(self, dataset_dirs):
        cfg = small_cfg(dataset_dirs)
        g = build_generator(0)
        d = build_discriminator(1)
        f = FeatureExtractor(seed=0)
        sched = LrSchedule(cfg.base_lr, cfg.max_lr, half_cycle=4)
        g_before, d_before = _weights_digest(g), _weights_digest(d)
        batch = _first_batch(dataset_dirs, cfg)
        stats = gan_step(g, d, batch, cfg, t=0, f=f, sched=sched, lr=0.0)
        # batchnorm running buffers move; parameter values must not
        pg = all(np.array_equal(p.value, q.value) for (_, p), (_, q) in
                 zip(build_generator(0).named_parameters(), g.named_parameters()))
        pd = all(np.array_equal(p.value, q.value) for (_, p), (_, q) in
                 zip(build_discriminator(1).named_parameters(), d.named_parameters()))
        assert pg and pd
        assert np.isfinite([stats.d_loss, stats.g_adv, stats.g_con, stats.total]).all()

    def test_single_batch_descent_at_small_lr(self, dataset_dirs):
        from toonlab.losses import adversarial_loss_d

        cfg = small_cfg(dataset_dirs, weight_decay=0.0)
        g = build_generator(0)
        d = build_discriminator(1)
        f = FeatureExtractor(seed=0)
        sched = LrSchedule(1e-4, 1e-4, half_cycle=1)
        batch = _first_batch(dataset_dirs, cfg)
        gp = g.forward(batch.p, train=True)

        def d_loss_now():
            return adversarial_loss_d(d.forward(batch.c, train=True),
                                      d.forward(batch.e, train=True),
                                      d.forward(gp, train=True))

        before = d_loss_now()
        gan_step(g, d, batch, cfg, t=0, f=f, sched=sched, lr=1e-4)
        after = d_loss_now()
        assert after <= before + 1e-6

    def test_mismatched_batch_shapes_rejected(self, dataset_dirs):
        cfg = small_cfg(dataset_dirs)
        with pytest.raises(ShapeError):
            TrainingBatch(p=np.zeros((2, 3, 16, 16), dtype=np.float32),
                          c=np.zeros((2, 3, 16, 16), dtype=np.float32),
                          e=np.zeros((2, 3, 8, 8), dtype=np.float32))

    def test_extractor_untouched_by_steps(self, dataset_dirs):
        cfg = small_cfg(dataset_dirs)
        g = build_generator(0)
        d = build_discriminator(1)
        f = FeatureExtractor(seed=0)
        before = {k: v.copy() for k, v in f.state_tensors().items()}
        sched = LrSchedule(cfg.base_lr, cfg.max_lr, half_cycle=4)
        batch = _first_batch(dataset_dirs, cfg)
        for t in range(3):
            gan_step(g, d, batch, cfg, t=t, f=f, sched=sched)
        assert all(np.array_equal(before[k], v) for k, v in f.state_tensors().items())


class TestInitPhase:
    def test_zero_epochs_leaves_generator(self, dataset_dirs):
        cfg = small_cfg(dataset_dirs, init_epochs=0)
        g = build_generator(3)
        digest = _weights_digest(g)
        photos = ImageFolder(cfg.photo_dir, cfg.image_size, cfg.seed, 0)
        stats = init_phase(g, photos, cfg)
        assert stats == []
        assert _weights_digest(g) == digest

    def test_two_runs_bitwise_identical(self, dataset_dirs):
        cfg = small_cfg(dataset_dirs, init_epochs=2)
        photos = ImageFolder(cfg.photo_dir, cfg.image_size, cfg.seed, 0)
        digests = []
        for _ in range(2):
            g = build_generator(cfg.seed)
            init_phase(g, photos, cfg)
            digests.append(_weights_digest(g))
        assert digests[0] == digests[1]


class TestTrain:
    def test_stats_length_and_csv(self, dataset_dirs, tmp_path):
        cfg = small_cfg(dataset_dirs, init_epochs=1, gan_epochs=2)
        g = build_generator(cfg.seed)
        d = build_discriminator(cfg.seed + 1)
        out = tmp_path / "run"
        final, stats = train(g, d, cfg, out, echo=False)
        assert len(stats) == cfg.init_epochs + cfg.gan_epochs
        assert os.path.exists(final)
        lines = (out / "stats.csv").read_text().splitlines()
        assert lines[0] == STATS_CSV_HEADER
        assert len(lines) == 1 + len(stats)

    def test_same_seed_bitwise_equal_checkpoints(self, dataset_dirs, tmp_path):
        cfg = small_cfg(dataset_dirs, init_epochs=1, gan_epochs=1)
        hashes = []
        for name in ("a", "b"):
            g = build_generator(cfg.seed)
            d = build_discriminator(cfg.seed + 1)
            final, _ = train(g, d, cfg, tmp_path / name, echo=False)
            hashes.append(hashlib.sha256(open(final, "rb").read()).hexdigest())
        assert hashes[0] == hashes[1]

    def test_resume_bitwise_equals_uninterrupted(self, dataset_dirs, tmp_path):
        cfg = small_cfg(dataset_dirs, init_epochs=1, gan_epochs=2, checkpoint_every=3)
        # uninterrupted run
        g = build_generator(cfg.seed)
        d = build_discriminator(cfg.seed + 1)
        final_a, stats_a = train(g, d, cfg, tmp_path / "full", echo=False)
        # interrupted: same config, resume from the mid-run checkpoint
        mid = tmp_path / "full" / "ckpt_step00000003.cgwt"
        assert mid.exists()
        g2 = build_generator(cfg.seed)
        d2 = build_discriminator(cfg.seed + 1)
        final_b, stats_b = train(g2, d2, cfg, tmp_path / "resumed",
                                 resume_from=mid, echo=False)
        assert (open(final_a, "rb").read() == open(final_b, "rb").read())
        assert [s.epoch for s in stats_a] == [s.epoch for s in stats_b]
        assert [s.total for s in stats_a] == pytest.approx([s.total for s in stats_b])

    def test_resume_with_different_config_rejected(self, dataset_dirs, tmp_path):
        cfg = small_cfg(dataset_dirs, init_epochs=1, gan_epochs=1)
        g = build_generator(cfg.seed)
        d = build_discriminator(cfg.seed + 1)
        final, _ = train(g, d, cfg, tmp_path / "x", echo=False)
        other = small_cfg(dataset_dirs, init_epochs=1, gan_epochs=1, seed=99)
        with pytest.raises(ConfigError):
            train(build_generator(99), build_discriminator(100), other,
                  tmp_path / "y", resume_from=final, echo=False)


class TestStylize:
    def _checkpoint(self, dataset_dirs, tmp_path):
        cfg = small_cfg(dataset_dirs, init_epochs=0, gan_epochs=1)
        g = build_generator(cfg.seed)
        d = build_discriminator(cfg.seed + 1)
        final, _ = train(g, d, cfg, tmp_path / "run", echo=False)
        return final

    def test_output_dims_match_input(self, dataset_dirs, tmp_path, rng):
        ckpt = self._checkpoint(dataset_dirs, tmp_path)
        img = synth_photo(rng, 224)
        out = stylize(ckpt, img)
        assert (out.width, out.height) == (224, 224)

    def test_byte_identical_reruns(self, dataset_dirs, tmp_path, rng):
        ckpt = self._checkpoint(dataset_dirs, tmp_path)
        img = synth_photo(rng, 32)
        a = stylize(ckpt, img)
        b = stylize(ckpt, img)
        assert np.array_equal(a.pixels, b.pixels)

    def test_indivisible_dims_pad_and_crop(self, dataset_dirs, tmp_path, rng):
        ckpt = self._checkpoint(dataset_dirs, tmp_path)
        img = synth_photo(rng, 30)
        out = stylize(ckpt, img)
        assert (out.width, out.height) == (30, 30)

    def test_zero_weight_generator_constant_output(self, rng):
        g = build_generator(0)
        for _, p in g.named_parameters():
            p.value[...] = 0
            if p.name.endswith("gamma"):
                p.value[...] = 1
        final_conv = dict(dict(g.spine.children())["final"].children())["conv"]
        final_conv.bias.value[...] = 0.5
        img = synth_photo(rng, 16)
        out = stylize_with(g, img)
        # beta=0.5 maps to round(1.5 * 127.5) = 191
        assert (out.pixels == 191).all()

    def test_checkpoint_without_generator_rejected(self, tmp_path):
        from toonlab.models import CheckpointError, save_checkpoint

        d = build_discriminator(0)
        path = tmp_path / "d_only.cgwt"
        save_checkpoint({"discriminator": d}, {}, path)
        with pytest.raises(CheckpointError):
            stylize(path, synth_photo(np.random.default_rng(0), 16))
