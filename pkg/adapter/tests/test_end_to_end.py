"""Full-loop tests driving the codec exclusively through its `skeda` CLI."""
import json
import shutil
import subprocess

import numpy as np
import pytest

from skeda_adapter import skdl

SEED_HEX = "5c" * 32
DIMS = "8,4,32,32"
FACTORS = "8,1,4,4"
N_BITS = 4 * 8 * 8
MSG_HEX = ("7b3e9a04c15f2d68" * 16)[: (N_BITS + 3) // 4]

pytestmark = pytest.mark.skipif(shutil.which("skeda") is None,
                                reason="skeda CLI not installed")


def skeda(*argv):
    proc = subprocess.run(("skeda",) + argv, capture_output=True, text=True)
    out = json.loads(proc.stdout) if proc.stdout.strip() else None
    err = json.loads(proc.stderr) if proc.stderr.strip() else None
    return proc.returncode, out, err


def adapter(*argv):
    proc = subprocess.run(("adapter",) + argv, capture_output=True, text=True)
    out = json.loads(proc.stdout) if proc.stdout.strip() else None
    err = json.loads(proc.stderr) if proc.stderr.strip() else None
    return proc.returncode, out, err


@pytest.fixture
def workdir(tmp_path):
    code, out, _ = skeda("keygen", "--seed-hex", SEED_HEX, "--dims", DIMS,
                         "--factors", FACTORS, "--out", str(tmp_path / "key.json"))
    assert code == 0 and out["n_bits"] == N_BITS
    code, _, _ = skeda("embed", "--key", str(tmp_path / "key.json"),
                       "--message-hex", MSG_HEX, "--out", str(tmp_path / "z.skdl"))
    assert code == 0
    return tmp_path


def test_clean_generate_invert_extract(workdir):
    code, _, _ = adapter("generate", "--prompt", "a drone shot of a coastline",
                         "--latent", str(workdir / "z.skdl"), "--out", str(workdir / "v.npy"))
    assert code == 0
    code, out, _ = adapter("invert", "--in", str(workdir / "v.npy"),
                           "--out", str(workdir / "r.skdl"))
    assert code == 0 and out["dims"] == [8, 4, 32, 32]

    code, out, _ = skeda("extract", "--key", str(workdir / "key.json"),
                         "--in", str(workdir / "r.skdl"), "--reference-hex", MSG_HEX)
    assert code == 0
    assert out["bit_accuracy"] >= 0.999


def test_attacked_video_still_extracts(workdir):
    adapter("generate", "--prompt", "clip", "--latent", str(workdir / "z.skdl"),
            "--out", str(workdir / "v.npy"))
    code, out, _ = adapter("attack", "--in", str(workdir / "v.npy"), "--kind", "frame_drop",
                           "--params", '{"p": 0.5, "seed": 4}', "--out", str(workdir / "va.npy"))
    assert code == 0 and 1 <= out["frames_out"] < 8
    adapter("invert", "--in", str(workdir / "va.npy"), "--out", str(workdir / "r.skdl"))

    code, out, _ = skeda("extract", "--key", str(workdir / "key.json"),
                         "--in", str(workdir / "r.skdl"), "--reference-hex", MSG_HEX)
    assert code == 0
    assert out["bit_accuracy"] == 1.0  # surviving frames carry full copies


def test_pixel_noise_degrades_latent_but_not_message(workdir):
    adapter("generate", "--prompt", "clip", "--latent", str(workdir / "z.skdl"),
            "--out", str(workdir / "v.npy"))
    adapter("attack", "--in", str(workdir / "v.npy"), "--kind", "pixel_noise",
            "--params", '{"sigma": 2.0, "seed": 1}', "--out", str(workdir / "vn.npy"))
    adapter("invert", "--in", str(workdir / "vn.npy"), "--out", str(workdir / "rn.skdl"))

    clean = skdl.read_latent(workdir / "z.skdl")
    noisy = skdl.read_latent(workdir / "rn.skdl")
    assert not np.array_equal(noisy, clean)

    code, out, _ = skeda("extract", "--key", str(workdir / "key.json"),
                         "--in", str(workdir / "rn.skdl"), "--reference-hex", MSG_HEX)
    assert code == 0
    assert out["bit_accuracy"] >= 0.99


def test_calibration_feeds_channel_simulator(workdir):
    adapter("generate", "--prompt", "clip", "--latent", str(workdir / "z.skdl"),
            "--out", str(workdir / "v.npy"))
    adapter("attack", "--in", str(workdir / "v.npy"), "--kind", "pixel_noise",
            "--params", '{"sigma": 3.0, "seed": 2}', "--out", str(workdir / "vn.npy"))
    adapter("invert", "--in", str(workdir / "vn.npy"), "--out", str(workdir / "rn.skdl"))

    spec_path = workdir / "inv.json"
    code, report, _ = adapter("calibrate", "--clean", str(workdir / "z.skdl"),
                              "--recovered", str(workdir / "rn.skdl"),
                              "--spec-out", str(spec_path))
    assert code == 0
    assert report["sigma_inv"] > 0.0 and 0.0 <= report["flip_rate"] < 0.5

    # the emitted spec must be consumable by the codec's attack command
    code, out, _ = skeda("attack", "--spec", str(spec_path), "--in", str(workdir / "z.skdl"),
                         "--out", str(workdir / "zs.skdl"))
    assert code == 0 and out["kind"] == "inversion_proxy"


def test_h264_crf30_target():
    """Compression robustness on the real video codec path.

    Needs ffmpeg and the deployed generation stack; without them this spec
    point cannot be measured here and the test records that honestly.
    """
    if shutil.which("ffmpeg") is None:
        pytest.skip("ffmpeg not available: H.264 CRF robustness not measurable in this environment")
    pytest.skip("deployed diffusion stack not available: H.264 target applies to the real pipeline")
