import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weaknoise.errors import CodebookCollision, DimensionMismatch, EmptyPath, OutOfRange
from weaknoise.modulate import (
    CODEBOOK_MAGIC,
    Codebook,
    ModulatorSpec,
    build_codebook,
    codebook_for,
    locus_polyline_length,
    message_of,
    modulate,
    modulate_many,
    quantize,
    read_codebook,
    uniform_quantize,
    write_codebook,
)


class TestQuantizer:
    @pytest.mark.parametrize("u,index,rec", [(0.125, 0, 0.125), (0.30, 1, 0.375), (1.0, 3, 0.875), (0.0, 0, 0.125)])
    def test_examples(self, u, index, rec):
        q = uniform_quantize(u, 4)
        assert (q.index, q.reconstruction) == (index, rec)

    @given(st.floats(0, 1), st.integers(1, 10_000))
    def test_error_bound(self, u, M):
        q = uniform_quantize(u, M)
        assert 0 <= q.index < M
        assert abs(u - q.reconstruction) <= 1 / (2 * M) * (1 + 1e-12)

    def test_bound_is_tight_at_cell_edges(self):
        M = 8
        edges = np.arange(M) / M
        _, rec = quantize(edges, M)
        assert np.allclose(np.abs(edges - rec), 1 / (2 * M), rtol=0, atol=1e-15)

    def test_rejects_out_of_range(self):
        for bad in (-0.01, 1.01, float("nan")):
            with pytest.raises(OutOfRange):
                uniform_quantize(bad, 4)
        with pytest.raises(ValueError):
            uniform_quantize(0.5, 0)


class TestCodebook:
    def test_on_power_shell(self):
        cb = build_codebook(64, 7, 2.5, seed=3)
        assert np.allclose(np.linalg.norm(cb.codewords, axis=1), math.sqrt(7 * 2.5), rtol=1e-12)

    def test_deterministic_per_seed(self):
        a, b, c = build_codebook(16, 4, 1.0, 9), build_codebook(16, 4, 1.0, 9), build_codebook(16, 4, 1.0, 10)
        assert np.array_equal(a.codewords, b.codewords)
        assert not np.array_equal(a.codewords, c.codewords)

    def test_file_round_trip(self, tmp_path):
        cb = build_codebook(12, 5, 1.5, seed=42)
        path = tmp_path / "cb.bin"
        write_codebook(path, cb)
        raw = path.read_bytes()
        assert raw[:4] == CODEBOOK_MAGIC
        assert len(raw) == 40 + 12 * 5 * 8  # magic, version, M, n, P, seed
        back = read_codebook(path)
        assert np.array_equal(back.codewords, cb.codewords)
        assert (back.M, back.n, back.P, back.seed) == (12, 5, 1.5, 42)

    def test_bad_file(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"XXXX" + bytes(40))
        with pytest.raises(ValueError):
            read_codebook(path)

    def test_collision_in_one_dimension(self):
        # on the line the power shell has only two points
        with pytest.raises(CodebookCollision):
            codebook_for(ModulatorSpec("quantize_and_code", 1, 1, 1.0, levels=(3,)))

    def test_index_tuple_round_trip(self):
        cb = Codebook(np.zeros((12, 1)), 1.0, levels=(3, 4))
        for m in range(12):
            assert cb.message(cb.index_tuple(m)) == m


class TestQuantizeAndCode:
    spec = ModulatorSpec("quantize_and_code", n=6, d=2, P=1.0, levels=(4, 4), seed=5)

    def test_message_of(self):
        cb = codebook_for(self.spec)
        assert cb.index_tuple(message_of(self.spec, (0.30, 0.80))).tolist() == [1, 3]

    def test_same_cell_same_signal(self):
        assert np.array_equal(modulate(self.spec, (0.26, 0.99)), modulate(self.spec, (0.49, 0.75)))

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1))
    def test_power_constraint(self, seed):
        U = np.random.default_rng(seed).random((400, 2))
        X = modulate_many(self.spec, U)
        assert np.all(np.einsum("ij,ij->i", X, X) <= 6 * 1.0 * (1 + 1e-9))

    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatch):
            modulate(self.spec, (0.5,))
        with pytest.raises(DimensionMismatch):
            ModulatorSpec("quantize_and_code", 4, 2, 1.0, levels=(4,))
        with pytest.raises(OutOfRange):
            modulate(self.spec, (0.5, 1.2))


class TestLinear:
    spec = ModulatorSpec("linear", n=5, d=1, P=2.0)

    def test_endpoints(self):
        assert np.allclose(modulate(self.spec, 0.5), 0, atol=1e-15)
        x = modulate(self.spec, 1.0)
        assert x @ x == pytest.approx(10.0, rel=1e-12)

    def test_path_length(self):
        for k in (2, 3, 17, 1001):
            assert locus_polyline_length(self.spec, np.linspace(0, 1, k)) == pytest.approx(2 * math.sqrt(10), rel=1e-12)

    def test_power_constraint(self):
        X = modulate_many(self.spec, np.random.default_rng(1).random(10_000))
        assert np.all(np.einsum("ij,ij->i", X, X) <= 10 * (1 + 1e-9))

    def test_two_dimensional_rejected(self):
        with pytest.raises(DimensionMismatch):
            ModulatorSpec("linear", 5, 2, 1.0)


class TestSpiral:
    spec = ModulatorSpec("spiral2d", n=2, d=1, P=1.0)

    def test_power_constraint(self):
        X = modulate_many(self.spec, np.linspace(0, 1, 10_001))
        assert np.all(np.einsum("ij,ij->i", X, X) <= 2 * (1 + 1e-9))

    def test_ends_on_rim(self):
        x = modulate(self.spec, 1.0)
        assert x @ x == pytest.approx(2.0, rel=1e-12)

    def test_needs_two_dimensions(self):
        with pytest.raises(DimensionMismatch):
            ModulatorSpec("spiral2d", 3, 1, 1.0)

    def test_longer_than_a_line(self):
        line = locus_polyline_length(ModulatorSpec("linear", 2, 1, 1.0), [0, 1])
        assert locus_polyline_length(self.spec, np.linspace(0, 1, 2001)) > line


class TestLocusLength:
    def test_constant_modulator(self):
        spec = ModulatorSpec("quantize_and_code", 3, 1, 1.0, levels=(1,))
        assert locus_polyline_length(spec, np.linspace(0, 1, 50)) == 0.0

    @given(st.integers(2, 40))
    def test_refinement_never_shortens(self, k):
        spec = ModulatorSpec("spiral2d", 2, 1, 1.0)
        coarse = np.linspace(0, 1, k)
        fine = np.sort(np.concatenate([coarse, (coarse[:-1] + coarse[1:]) / 2]))
        assert locus_polyline_length(spec, fine) >= locus_polyline_length(spec, coarse) - 1e-12

    def test_empty_path(self):
        with pytest.raises(EmptyPath):
            locus_polyline_length(ModulatorSpec("linear", 2, 1, 1.0), [0.5])
