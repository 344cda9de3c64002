import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from burstsched.io import (
    BadMagicError,
    FormatError,
    NonFiniteDataError,
    TruncatedFileError,
    export_png,
    import_png_sequence,
    read_bayer,
    read_png,
    read_radseq,
    write_bayer,
    write_radseq,
)
from burstsched.simulator import BayerFrame, RadianceSequence


class TestRadseq:
    def test_round_trip(self, tmp_path, rng):
        seq = RadianceSequence(rng.random((3, 4, 6, 3)).astype(np.float32), e_S=1 / 1920)
        write_radseq(tmp_path / "a.radseq", seq)
        back = read_radseq(tmp_path / "a.radseq")
        np.testing.assert_array_equal(back.frames, seq.frames)
        assert back.e_S == seq.e_S

    def test_file_size(self, tmp_path):
        write_radseq(tmp_path / "s.radseq", RadianceSequence(np.zeros((1, 2, 2, 3))))
        assert (tmp_path / "s.radseq").stat().st_size == 76

    def test_planar_layout(self, tmp_path):
        frames = np.zeros((1, 2, 2, 3), dtype=np.float32)
        frames[0, :, :, 1] = 0.5
        write_radseq(tmp_path / "s.radseq", RadianceSequence(frames))
        body = np.frombuffer((tmp_path / "s.radseq").read_bytes()[28:], dtype="<f4")
        np.testing.assert_array_equal(body, [0, 0, 0, 0, 0.5, 0.5, 0.5, 0.5, 0, 0, 0, 0])

    def test_bad_magic(self, tmp_path):
        write_radseq(tmp_path / "s.radseq", RadianceSequence(np.zeros((1, 2, 2, 3))))
        data = bytearray((tmp_path / "s.radseq").read_bytes())
        data[0:1] = b"X"
        (tmp_path / "s.radseq").write_bytes(bytes(data))
        with pytest.raises(BadMagicError):
            read_radseq(tmp_path / "s.radseq")

    def test_truncated(self, tmp_path):
        write_radseq(tmp_path / "s.radseq", RadianceSequence(np.zeros((2, 2, 2, 3))))
        data = (tmp_path / "s.radseq").read_bytes()
        (tmp_path / "s.radseq").write_bytes(data[:-4])
        with pytest.raises(TruncatedFileError):
            read_radseq(tmp_path / "s.radseq")
        (tmp_path / "s.radseq").write_bytes(data[:20])
        with pytest.raises(TruncatedFileError):
            read_radseq(tmp_path / "s.radseq")

    def test_trailing_bytes(self, tmp_path):
        write_radseq(tmp_path / "s.radseq", RadianceSequence(np.zeros((1, 2, 2, 3))))
        with open(tmp_path / "s.radseq", "ab") as fh:
            fh.write(b"\0")
        with pytest.raises(FormatError):
            read_radseq(tmp_path / "s.radseq")

    def test_non_finite_on_read(self, tmp_path):
        write_radseq(tmp_path / "s.radseq", RadianceSequence(np.zeros((1, 2, 2, 3))))
        data = bytearray((tmp_path / "s.radseq").read_bytes())
        data[28:32] = np.array([np.nan], dtype="<f4").tobytes()
        (tmp_path / "s.radseq").write_bytes(bytes(data))
        with pytest.raises(NonFiniteDataError):
            read_radseq(tmp_path / "s.radseq")

    def test_float32_overflow_rejected(self, tmp_path):
        with pytest.raises(NonFiniteDataError):
            write_radseq(tmp_path / "s.radseq", RadianceSequence(np.full((1, 2, 2, 3), 1e300)))


class TestBayer:
    def test_round_trip(self, tmp_path, rng):
        f = BayerFrame(rng.random((4, 6)).astype(np.float32), 0.0125, 34133.333333333336, 0.05, 0.0625)
        write_bayer(tmp_path / "f.bayer", f)
        back = read_bayer(tmp_path / "f.bayer")
        np.testing.assert_array_equal(back.plane, f.plane)
        assert (back.exposure, back.gain, back.t_start, back.t_end) == (f.exposure, f.gain, f.t_start, f.t_end)

    def test_file_size(self, tmp_path):
        write_bayer(tmp_path / "f.bayer", BayerFrame(np.zeros((2, 2)), 1.0, 1.0, 0.0, 1.0))
        assert (tmp_path / "f.bayer").stat().st_size == 48 + 16

    def test_wrong_container(self, tmp_path):
        write_radseq(tmp_path / "s.radseq", RadianceSequence(np.zeros((1, 2, 2, 3))))
        with pytest.raises(BadMagicError):
            read_bayer(tmp_path / "s.radseq")

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float32, (2, 4), elements=st.floats(0, 1, width=32)))
    def test_bit_exact_property(self, tmp_path_factory, plane):
        path = tmp_path_factory.mktemp("b") / "f.bayer"
        write_bayer(path, BayerFrame(plane, 0.1, 2.0, 0.0, 0.1))
        np.testing.assert_array_equal(read_bayer(path).plane, plane)


class TestPng:
    @pytest.mark.parametrize("depth", [8, 16])
    def test_round_trip(self, tmp_path, rng, depth):
        img = rng.random((5, 7, 3))
        export_png(img, tmp_path / "x.png", depth)
        back = read_png(tmp_path / "x.png")
        assert back.shape == img.shape
        assert np.abs(back - img).max() <= 0.5 / (2**depth - 1) + 1e-12

    def test_channel_order(self, tmp_path):
        img = np.zeros((2, 2, 3))
        img[..., 0] = 1.0
        export_png(img, tmp_path / "r.png")
        np.testing.assert_array_equal(read_png(tmp_path / "r.png")[..., 0], 1.0)

    def test_gray(self, tmp_path):
        export_png(np.full((3, 3), 0.5), tmp_path / "g.png")
        assert read_png(tmp_path / "g.png").shape == (3, 3)

    def test_sequence_order(self, tmp_path):
        for name, v in [("b.png", 0.2), ("a.png", 0.8), ("c.png", 0.5)]:
            export_png(np.full((2, 2, 3), v), tmp_path / name)
        frames = import_png_sequence(tmp_path)
        assert [round(f[0, 0, 0], 2) for f in frames] == [0.8, 0.2, 0.5]

    def test_sequence_shape_mismatch(self, tmp_path):
        export_png(np.zeros((2, 2, 3)), tmp_path / "a.png")
        export_png(np.zeros((4, 2, 3)), tmp_path / "b.png")
        with pytest.raises(ValueError):
            import_png_sequence(tmp_path)

    def test_empty_dir(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            import_png_sequence(tmp_path)
