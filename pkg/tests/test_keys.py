import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from skeda.errors import MalformedKeyFile, NonDividingFactors, ValidationError, VersionMismatch
from skeda.keys import (DEFAULT_DIMS, DEFAULT_FACTORS, LatentDims, ReplicationFactors, Seed,
                        derive_keys, load_keys, prng_stream, save_keys)

S0 = Seed(bytes(range(32)))


class TestSeed:
    def test_must_be_32_bytes(self):
        with pytest.raises(ValidationError):
            Seed(b"short")

    def test_hex_round_trip(self):
        assert Seed.from_hex(S0.hex()) == S0

    def test_cross_seed_independence(self):
        # keys from distinct seeds look uncorrelated: |corr| bounded by 3/sqrt(L)
        L = 4096
        a = prng_stream(Seed.from_hex("11" * 32), b"equalize").bits(L).astype(float)
        b = prng_stream(Seed.from_hex("22" * 32), b"equalize").bits(L).astype(float)
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 3 / np.sqrt(L)


class TestStream:
    def test_deterministic_prefix(self):
        a = prng_stream(S0, b"tag").take_bytes(1000)
        b = prng_stream(S0, b"tag").take_bytes(1000)
        assert a == b

    def test_domain_separation_correlation(self):
        n = 10**6
        u1 = prng_stream(S0, b"equalize").uniforms(n)
        u2 = prng_stream(S0, b"shuffle").uniforms(n)
        assert abs(np.corrcoef(u1, u2)[0, 1]) < 0.01

    def test_ones_fraction(self):
        bits = prng_stream(S0, b"anything").bits(10**6)
        assert abs(bits.mean() - 0.5) < 0.002

    def test_byte_uniformity_chi_square(self):
        raw = np.frombuffer(prng_stream(S0, b"chi").take_bytes(10**6), dtype=np.uint8)
        counts = np.bincount(raw, minlength=256)
        assert chisquare(counts).pvalue > 1e-4

    def test_uniforms_open_interval(self):
        u = prng_stream(S0, b"u").uniforms(10**5)
        assert u.min() > 0.0 and u.max() < 1.0

    def test_equalizing_key_not_in_shuffle_stream(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            seed = Seed(rng.bytes(32))
            eq = derive_keys(seed, LatentDims(2, 2, 4, 4), ReplicationFactors(1, 1, 1, 1)).equalizing_key
            shuf = prng_stream(seed, b"shuffle").bits(4 * len(eq))
            assert not np.array_equal(shuf[:len(eq)], eq)
            assert not np.array_equal(shuf[-len(eq):], eq)


class TestDeriveKeys:
    def test_default_config(self):
        ks = derive_keys(S0, LatentDims(16, 4, 64, 64), ReplicationFactors(16, 1, 8, 8))
        assert ks.n_bits == 256
        assert ks.equalizing_key.shape == (256,)
        assert ks.base_perm.shape == (16384,)
        assert ks.frame_perms.shape == (16, 16384)

    def test_degenerate_identity(self):
        ks = derive_keys(S0, LatentDims(1, 1, 1, 1), ReplicationFactors(1, 1, 1, 1))
        assert ks.n_bits == 1
        assert list(ks.base_perm) == [0]
        assert ks.equalizing_key.shape == (1,)

    def test_deterministic(self):
        assert derive_keys(S0) == derive_keys(S0)

    def test_non_dividing_factors(self):
        with pytest.raises(NonDividingFactors):
            derive_keys(S0, LatentDims(16, 4, 64, 64), ReplicationFactors(16, 3, 8, 8))

    def test_uniform_mode_perms_all_equal(self):
        ks = derive_keys(S0, LatentDims(4, 2, 4, 4), ReplicationFactors(4, 1, 2, 2))
        for t in range(4):
            assert np.array_equal(ks.frame_perms[t], ks.base_perm)

    def test_per_frame_mode_perms_distinct_bijections(self):
        ks = derive_keys(S0, LatentDims(4, 2, 8, 8), ReplicationFactors(4, 1, 2, 2), "per_frame")
        seen = set()
        for t in range(4):
            perm = ks.frame_perms[t]
            assert np.array_equal(np.sort(perm), np.arange(2 * 8 * 8))
            seen.add(tuple(perm))
        assert len(seen) == 4

    def test_perm_validity_many_seeds(self):
        rng = np.random.default_rng(123)
        dims = LatentDims(2, 2, 8, 8)
        expected = np.arange(dims.frame_size)
        for _ in range(1000):
            ks = derive_keys(Seed(rng.bytes(32)), dims, ReplicationFactors(2, 1, 2, 2))
            assert np.array_equal(np.sort(ks.base_perm), expected)

    def test_bad_mode(self):
        with pytest.raises(ValidationError):
            derive_keys(S0, mode="sideways")

    @given(st.integers(0, 2**256 - 1))
    @settings(max_examples=50, deadline=None)
    def test_perm_bijection_property(self, seed_int):
        seed = Seed(seed_int.to_bytes(32, "big"))
        ks = derive_keys(seed, LatentDims(3, 1, 4, 4), ReplicationFactors(1, 1, 2, 2), "per_frame")
        for t in range(3):
            assert np.array_equal(np.sort(ks.frame_perms[t]), np.arange(16))


class TestKeyFile:
    def test_round_trip(self, tmp_path):
        ks = derive_keys(S0, DEFAULT_DIMS, DEFAULT_FACTORS, "per_frame")
        path = tmp_path / "key.json"
        save_keys(ks, path)
        assert load_keys(path) == ks

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "key.json"
        save_keys(derive_keys(S0), path)
        blob = path.read_text()
        path.write_text(blob[:len(blob) // 2])
        with pytest.raises(MalformedKeyFile):
            load_keys(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "key.json"
        path.write_text('{"version": 99, "seed_hex": "%s", "dims": [1,1,1,1], '
                        '"factors": [1,1,1,1], "mode": "uniform"}' % S0.hex())
        with pytest.raises(VersionMismatch):
            load_keys(path)

    def test_bad_seed_hex(self, tmp_path):
        path = tmp_path / "key.json"
        path.write_text('{"version": 1, "seed_hex": "zz", "dims": [1,1,1,1], '
                        '"factors": [1,1,1,1], "mode": "uniform"}')
        with pytest.raises(MalformedKeyFile):
            load_keys(path)
