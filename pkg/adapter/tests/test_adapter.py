import json
import shutil
import subprocess

import numpy as np
import pytest

from skeda_adapter import attacks, skdl, video_io
from skeda_adapter.calibrate import calibrate, to_channel_spec
from skeda_adapter.backend import GenerationJob, InversionJob, generate, invert
from skeda_adapter.errors import (CodecError, DecodeError, ModelLoadError, ShapeMismatch,
                                  ValidationError)

DIMS = (4, 4, 16, 16)


def random_latent(seed=0, dims=DIMS):
    return np.random.default_rng(seed).normal(size=dims).astype(np.float32)


class TestSkdl:
    def test_round_trip(self, tmp_path):
        latent = random_latent()
        path = tmp_path / "z.skdl"
        skdl.write_latent(path, latent)
        assert np.array_equal(skdl.read_latent(path), latent)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "z.skdl"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(DecodeError):
            skdl.read_latent(path)

    def test_truncated_payload(self, tmp_path):
        latent = random_latent()
        path = tmp_path / "z.skdl"
        skdl.write_latent(path, latent)
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(DecodeError):
            skdl.read_latent(path)


class TestToyBackend:
    def test_generate_shape(self, tmp_path):
        zpath, vpath = tmp_path / "z.skdl", tmp_path / "v.npy"
        skdl.write_latent(zpath, random_latent())
        generate(GenerationJob("a cat", str(zpath), str(vpath)))
        frames = video_io.read_video(vpath)
        assert frames.shape == (4, 128, 128, 3)

    def test_deterministic(self, tmp_path):
        zpath = tmp_path / "z.skdl"
        skdl.write_latent(zpath, random_latent())
        a, b = tmp_path / "a.npy", tmp_path / "b.npy"
        generate(GenerationJob("a cat", str(zpath), str(a)))
        generate(GenerationJob("a cat", str(zpath), str(b)))
        assert a.read_bytes() == b.read_bytes()

    def test_prompt_changes_background_not_payload(self, tmp_path):
        zpath = tmp_path / "z.skdl"
        skdl.write_latent(zpath, random_latent())
        a, b = tmp_path / "a.npy", tmp_path / "b.npy"
        generate(GenerationJob("a cat", str(zpath), str(a)))
        generate(GenerationJob("a dog", str(zpath), str(b)))
        assert a.read_bytes() != b.read_bytes()
        ra, rb = tmp_path / "ra.skdl", tmp_path / "rb.skdl"
        invert(InversionJob(str(a), str(ra)))
        invert(InversionJob(str(b), str(rb)))
        assert np.array_equal(skdl.read_latent(ra), skdl.read_latent(rb))

    def test_invert_round_trip_near_lossless(self, tmp_path):
        latent = random_latent(7)
        zpath, vpath, rpath = tmp_path / "z.skdl", tmp_path / "v.npy", tmp_path / "r.skdl"
        skdl.write_latent(zpath, latent)
        generate(GenerationJob("clip", str(zpath), str(vpath)))
        invert(InversionJob(str(vpath), str(rpath)))
        recovered = skdl.read_latent(rpath)
        assert recovered.shape == latent.shape
        assert np.max(np.abs(recovered - latent)) <= 1.0 / 4096.0
        sign_agree = np.mean((recovered > 0) == (latent > 0))
        assert sign_agree >= 0.999

    def test_unknown_sampler(self, tmp_path):
        zpath = tmp_path / "z.skdl"
        skdl.write_latent(zpath, random_latent())
        with pytest.raises(ModelLoadError):
            generate(GenerationJob("x", str(zpath), str(tmp_path / "v.npy"),
                                   sampler="dpmsolver"))

    def test_latent_too_large_for_frame(self, tmp_path):
        zpath = tmp_path / "z.skdl"
        skdl.write_latent(zpath, np.zeros((1, 64, 8, 8), dtype=np.float32))
        with pytest.raises(ShapeMismatch):
            generate(GenerationJob("x", str(zpath), str(tmp_path / "v.npy"), scale=1))

    def test_bad_steps(self):
        with pytest.raises(ValidationError):
            GenerationJob("x", "a", "b", steps=0)
        with pytest.raises(ValidationError):
            InversionJob("a", "b", steps=0)

    def test_invert_rejects_indivisible_resolution(self, tmp_path):
        vpath = tmp_path / "v.npy"
        video_io.write_video(vpath, np.zeros((2, 20, 20, 3), dtype=np.uint8))
        with pytest.raises(ShapeMismatch):
            invert(InversionJob(str(vpath), str(tmp_path / "r.skdl"), scale=8))


class TestAttacks:
    def setup_method(self):
        self.frames = np.random.default_rng(3).integers(0, 256, (4, 32, 32, 3), dtype=np.uint8)

    def test_pixel_noise(self):
        out = attacks.attack_video(self.frames, "pixel_noise", {"sigma": 5.0})
        assert out.shape == self.frames.shape
        assert not np.array_equal(out, self.frames)

    def test_brightness_clips(self):
        out = attacks.attack_video(self.frames, "brightness", {"factor": 4.0})
        assert np.mean(out == 255) > 0.5

    def test_brightness_identity(self):
        out = attacks.attack_video(self.frames, "brightness", {"factor": 1.0})
        assert np.array_equal(out, self.frames)

    def test_blur_smooths(self):
        out = attacks.attack_video(self.frames, "blur", {"k": 3})
        assert out.astype(float).std() < self.frames.astype(float).std()

    def test_frame_drop(self):
        out = attacks.attack_video(self.frames, "frame_drop", {"p": 1.0})
        assert out.shape[0] == 1

    def test_bad_kind(self):
        with pytest.raises(ValidationError):
            attacks.attack_video(self.frames, "warp", {})

    def test_h264_requires_ffmpeg(self):
        if shutil.which("ffmpeg") is None:
            with pytest.raises(CodecError):
                attacks.attack_video(self.frames, "h264", {"crf": 30})
        else:
            out = attacks.attack_video(self.frames, "h264", {"crf": 30})
            assert out.shape[1:] == self.frames.shape[1:]


class TestCalibrate:
    def test_identical_latents(self):
        z = random_latent(1)
        report = calibrate(z, z)
        assert report["sigma_inv"] == 0.0 and report["flip_rate"] == 0.0

    def test_noisy_recovery(self):
        z = random_latent(2)
        rng = np.random.default_rng(9)
        rec = z + rng.normal(0, 0.25, z.shape).astype(np.float32)
        report = calibrate(z, rec)
        assert abs(report["sigma_inv"] - 0.25) < 0.01
        assert 0.0 < report["flip_rate"] < 0.2

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            calibrate(random_latent(1), random_latent(1, dims=(2, 4, 16, 16)))

    def test_channel_spec_mapping(self):
        spec = to_channel_spec({"sigma_inv": 0.1, "flip_rate": 0.02}, "ab" * 32)
        assert spec == {"kind": "inversion_proxy",
                        "params": {"sigma": 0.1, "flip_p": 0.02},
                        "seed_hex": "ab" * 32}
