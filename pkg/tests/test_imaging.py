"""Magnitude scaling, RGB composition, and image writers."""

import numpy as np
import pytest

from mbsar.errors import ConfigError
from mbsar.imaging import (
    composite_u8,
    magnitude_db,
    rgb_compose,
    save_composite_png,
    save_composite_ppm,
    save_magnitude_pgm,
    save_magnitude_png,
    write_pgm,
    write_ppm,
)


class TestMagnitudeDb:
    def test_peak_is_zero_db(self):
        img = np.array([[1.0 + 0.0j, 0.5j], [0.25, 0.0]])
        db = magnitude_db(img)
        assert db[0, 0] == 0.0
        assert db[0, 1] == pytest.approx(-6.0206, abs=1e-3)
        assert db[1, 0] == pytest.approx(-12.0412, abs=1e-3)

    def test_floor_clamps(self):
        img = np.array([[1.0, 1e-9]])
        db = magnitude_db(img, floor_db=-60.0)
        assert db[0, 1] == -60.0

    def test_all_zero_maps_to_floor(self):
        db = magnitude_db(np.zeros((3, 3), dtype=complex), floor_db=-40.0)
        assert np.all(db == -40.0)

    def test_floor_must_be_negative(self):
        with pytest.raises(ConfigError):
            magnitude_db(np.ones((2, 2)), floor_db=0.0)

    def test_accepts_focused_image(self):
        from mbsar.focus import Beam, FocusedImage, ImageGrid

        img = FocusedImage(
            data=np.array([[2.0 + 0.0j]]),
            grid=ImageGrid(x0=0.0, y0=0.0, dx=0.1, dy=0.1, nx=1, ny=1),
            beam=Beam(alpha_p=0.0, delta_alpha=0.1),
            contributions=1,
        )
        assert magnitude_db(img)[0, 0] == 0.0


class TestRgbCompose:
    def test_joint_peak_normalization(self):
        r = np.array([[4.0 + 0.0j]])
        g = np.array([[2.0 + 0.0j]])
        b = np.array([[1.0 + 0.0j]])
        comp = rgb_compose([r, g, b], dynamic_range_db=40.0)
        assert comp.rgb[0, 0, 0] == pytest.approx(1.0)
        assert comp.rgb[0, 0, 1] == pytest.approx(1.0 - 6.0206 / 40.0, abs=1e-4)
        assert comp.rgb[0, 0, 2] == pytest.approx(1.0 - 12.0412 / 40.0,
                                                  abs=1e-4)

    def test_scaling_all_channels_is_invariant(self):
        rng = np.random.default_rng(0)
        imgs = [rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
                for _ in range(3)]
        a = rgb_compose(imgs)
        b = rgb_compose([7.0 * im for im in imgs])
        assert np.allclose(a.rgb, b.rgb, atol=1e-12)

    def test_below_range_clips_to_zero(self):
        imgs = [np.array([[1.0 + 0.0j]]), np.array([[1e-6 + 0.0j]]),
                np.array([[1.0 + 0.0j]])]
        comp = rgb_compose(imgs, dynamic_range_db=40.0)
        assert comp.rgb[0, 0, 1] == 0.0

    def test_requires_exactly_three(self):
        img = np.ones((2, 2), dtype=complex)
        with pytest.raises(ConfigError):
            rgb_compose([img, img])
        with pytest.raises(ConfigError):
            rgb_compose([img] * 4)

    def test_requires_matching_shapes(self):
        with pytest.raises(ConfigError):
            rgb_compose([np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2))])

    def test_dynamic_range_must_be_positive(self):
        img = np.ones((2, 2), dtype=complex)
        with pytest.raises(ConfigError):
            rgb_compose([img] * 3, dynamic_range_db=0.0)


class TestWriters:
    def test_pgm_header_and_payload(self, tmp_path):
        gray = np.arange(6, dtype=np.uint8).reshape(2, 3)
        path = tmp_path / "img.pgm"
        write_pgm(path, gray)
        blob = path.read_bytes()
        assert blob.startswith(b"P5\n3 2\n255\n")
        assert blob[len(b"P5\n3 2\n255\n"):] == gray.tobytes()

    def test_ppm_header_and_payload(self, tmp_path):
        rgb = np.arange(24, dtype=np.uint8).reshape(2, 4, 3)
        path = tmp_path / "img.ppm"
        write_ppm(path, rgb)
        blob = path.read_bytes()
        assert blob.startswith(b"P6\n4 2\n255\n")
        assert blob[len(b"P6\n4 2\n255\n"):] == rgb.tobytes()

    def test_magnitude_writers_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
        pgm = tmp_path / "m.pgm"
        png = tmp_path / "m.png"
        save_magnitude_pgm(pgm, img)
        save_magnitude_png(png, img)
        from PIL import Image

        with Image.open(png) as im:
            arr_png = np.asarray(im)
        arr_pgm = np.frombuffer(
            pgm.read_bytes().split(b"255\n", 1)[1], dtype=np.uint8
        ).reshape(5, 4)
        assert np.array_equal(arr_png, arr_pgm)
        # display rows are flipped so increasing y points up
        db = magnitude_db(img, floor_db=-60.0)
        expect = np.round((db + 60.0) / 60.0 * 255.0).astype(np.uint8)[::-1]
        assert np.array_equal(arr_pgm, expect)

    def test_composite_writers_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        imgs = [rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
                for _ in range(3)]
        comp = rgb_compose(imgs)
        ppm = tmp_path / "c.ppm"
        png = tmp_path / "c.png"
        save_composite_ppm(ppm, comp)
        save_composite_png(png, comp)
        from PIL import Image

        with Image.open(png) as im:
            arr_png = np.asarray(im)
        arr_ppm = np.frombuffer(
            ppm.read_bytes().split(b"255\n", 1)[1], dtype=np.uint8
        ).reshape(3, 5, 3)
        assert np.array_equal(arr_png, arr_ppm)
        assert np.array_equal(arr_ppm, composite_u8(comp)[::-1])
