"""Synthetic generators: determinism, shapes, session fixture files."""
import numpy as np

from actmap.frames import RawVideoReader
from actmap.formats import read_detections, read_region_inits
from actmap.synth import MovingTextureClips, build_typing_session, moving_square_scene


def test_moving_texture_shapes_and_labels():
    ds = MovingTextureClips(6, frame_rate=10, seed=0)
    assert len(ds) == 6
    assert ds.labels() == [0, 1, 0, 1, 0, 1]
    x, y = ds.load(1)
    assert x.shape == (3, 30, 224, 224)
    assert x.dtype == np.float32
    assert 0.0 <= x.min() and x.max() <= 1.0
    assert y == 1


def test_moving_texture_letterbox_band():
    ds = MovingTextureClips(2, frame_rate=10, seed=3)
    x, _ = ds.load(0)
    pad = (224 - ds.BAND_HEIGHT) // 2
    np.testing.assert_array_equal(x[:, :, :pad], 0.0)
    np.testing.assert_array_equal(x[:, :, pad + ds.BAND_HEIGHT:], 0.0)
    assert x[:, :, pad:pad + ds.BAND_HEIGHT].std() > 0.01


def test_moving_texture_deterministic_and_motion():
    a, _ = MovingTextureClips(4, 10, seed=5).load(3)
    b, _ = MovingTextureClips(4, 10, seed=5).load(3)
    np.testing.assert_array_equal(a, b)
    c, _ = MovingTextureClips(4, 10, seed=6).load(3)
    assert not np.array_equal(a, c)
    moving, _ = MovingTextureClips(2, 10, seed=0).load(1)
    static, _ = MovingTextureClips(2, 10, seed=0).load(0)
    motion = np.abs(np.diff(moving, axis=1)).mean()
    still = np.abs(np.diff(static, axis=1)).mean()
    assert motion > 3 * still


def test_moving_square_scene_boxes():
    frames, boxes = moving_square_scene(5, velocity=(2.0, 0.0))
    assert frames.shape[0] == len(boxes) == 5
    assert boxes[4].x - boxes[0].x == 8.0


def test_typing_session_fixture(tmp_path):
    fx = build_typing_session(tmp_path, duration_s=8, seed=0)
    reader = RawVideoReader.open(fx.video_path)
    assert reader.frame_count == 240
    assert (reader.width, reader.height) == (fx.width, fx.height)
    dets = read_detections(fx.detections_path)
    assert [d.frame for d in dets] == [0, 150]
    assert all(d.cls == "keyboard" for d in dets)
    inits = read_region_inits(fx.regions_path)
    assert sorted(i.person for i in inits) == ["Amara", "Beto", "Carmen"]
    frame = reader.read(0, 1)[0]
    box = fx.keyboard_boxes[0]
    inside = frame[int(box.y):int(box.y + box.h), int(box.x):int(box.x + box.w)]
    assert inside.mean() > frame.mean() + 20  # keyboard band is bright
