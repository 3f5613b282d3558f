"""Tests for CLI settings and density specs."""

import json

import numpy as np
import pytest

from config import reload_config
from errors import InputError
from handlers.file_handler import write_array_csv
from handlers.gallery import gallery
from handlers.run_config import RunConfig, load_config_file, load_density, parse_density_spec


class TestDensitySpec:
    def test_gallery_with_params(self):
        spec = parse_density_spec('gallery:oned-profile:src:amplitude=0.2,localized=true')
        assert spec.kind == 'gallery'
        assert spec.name == 'oned-profile'
        assert spec.role == 'src'
        assert spec.params == {'amplitude': 0.2, 'localized': True}

    def test_csv_forms(self):
        assert parse_density_spec('csv:data/f.txt').path == 'data/f.txt'
        spec = parse_density_spec('densities/g.CSV')
        assert spec.kind == 'csv' and spec.path == 'densities/g.CSV'

    @pytest.mark.parametrize('text', [
        'hdf5:f.h5',
        'csv:',
        'gallery:twin-bumps',
        'gallery:nope:src',
        'gallery:twin-bumps:middle',
        'gallery:twin-bumps:src:amplitude',
        'gallery:twin-bumps:src:amplitude=big',
    ])
    def test_invalid(self, text):
        with pytest.raises(InputError):
            parse_density_spec(text)

    def test_load_gallery_roles(self):
        f, g = gallery('twin-bumps', 33)
        src = load_density(parse_density_spec('gallery:twin-bumps:src'), 33)
        dst = load_density(parse_density_spec('gallery:twin-bumps:dst'), 33)
        np.testing.assert_array_equal(src.values, f.values)
        np.testing.assert_array_equal(dst.values, g.values)

    def test_load_csv(self, tmp_path):
        f, _ = gallery('twin-bumps', 17)
        path = write_array_csv(f.values, f.grid, tmp_path / 'f.csv')
        loaded = load_density(parse_density_spec(str(path)), 65)
        assert loaded.is_density
        assert loaded.grid.shape == (17, 17)


class TestRunConfig:
    def test_flags_override_file(self):
        run = RunConfig.from_sources(
            {'command': 'solve', 'f': 'gallery:twin-bumps:src', 'g': None, 'steps': 16, 'grid': None},
            {'g': 'gallery:twin-bumps:dst', 'steps': 8, 'grid': 33})
        assert run.steps == 16
        assert run.grid == 33
        assert run.g == 'gallery:twin-bumps:dst'

    def test_defaults(self, monkeypatch):
        monkeypatch.setenv('JF_OUTPUT_DIR', 'runs')
        reload_config()
        run = RunConfig(f='gallery:twin-bumps:src', g='gallery:twin-bumps:dst')
        assert run.out == 'runs'
        assert run.grid == 65
        assert run.steps == 32
        assert run.sizes == [33, 65, 129]

    @pytest.mark.parametrize('values', [
        {'command': 'solve', 'f': 'gallery:twin-bumps:src'},
        {'command': 'solve', 'f': 'x.h5', 'g': 'gallery:twin-bumps:dst'},
        {'command': 'convergence'},
        {'command': 'convergence', 'problem': 'nope'},
        {'command': 'convergence', 'problem': 'twin-bumps', 'sizes': [65, 33]},
        {'command': 'convergence', 'problem': 'twin-bumps', 'sizes': [9, 33]},
        {'command': 'solve', 'f': 'a.csv', 'g': 'b.csv', 'grid': 8},
        {'command': 'solve', 'f': 'a.csv', 'g': 'b.csv', 'colour': 'red'},
    ])
    def test_invalid(self, values):
        with pytest.raises(InputError, match='Invalid run configuration'):
            RunConfig.from_sources(values)

    def test_pipeline_config_leaves_margin_to_the_band_solve(self):
        run = RunConfig(f='a.csv', g='b.csv', method='direct', grid=33, steps=8, margin=0.3,
                        collar_width=0.05)
        cfg = run.pipeline_config()
        assert cfg.method == 'direct'
        assert cfg.grid_n == 33 and cfg.steps == 8
        assert cfg.margin is None
        assert cfg.collar_width == 0.05

    def test_ensure_output_dir(self, tmp_path):
        run = RunConfig(f='a.csv', g='b.csv', out=str(tmp_path / 'a' / 'b'))
        path = run.ensure_output_dir()
        assert path.is_dir()

    def test_output_dir_blocked_by_file(self, tmp_path):
        blocker = tmp_path / 'file'
        blocker.write_text('x')
        run = RunConfig(f='a.csv', g='b.csv', out=str(blocker / 'sub'))
        with pytest.raises(InputError):
            run.ensure_output_dir()


class TestConfigFile:
    def test_dash_keys(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'collar-width': 0.05, 'grid': 33}))
        assert load_config_file(str(path)) == {'collar_width': 0.05, 'grid': 33}

    def test_invalid_json_location(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text('{\n  "grid": 33,\n  oops\n}')
        with pytest.raises(InputError) as excinfo:
            load_config_file(str(path))
        assert excinfo.value.line == 3

    def test_not_an_object(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text('[1, 2]')
        with pytest.raises(InputError, match='JSON object'):
            load_config_file(str(path))

    def test_missing(self, tmp_path):
        with pytest.raises(InputError, match='not found'):
            load_config_file(str(tmp_path / 'none.json'))
