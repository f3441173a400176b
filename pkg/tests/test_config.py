import json
from pathlib import Path

from config import AppConfig, Config
from core.batch_processor import THREADS_ENV, BatchProcessor, resolve_workers


def write_file(path: Path, content: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(content)


def test_defaults(tmp_path):
    cfg = Config(config_file=str(tmp_path / 'config.json'))
    assert cfg.app_config.dt == 0.1
    assert cfg.app_config.tte_grid == [100.0, 240.0, 480.0, 720.0]
    assert cfg['fit_runs'] == 10
    assert cfg.app_config.validate() == (True, "")


def test_load_json(tmp_path):
    path = tmp_path / 'config.json'
    write_file(path, json.dumps({"dt": 0.05, "seed": 3, "output_format": "json"}))
    cfg = Config(config_file=str(path))
    assert cfg.app_config.dt == 0.05
    assert cfg.app_config.seed == 3
    assert cfg.app_config.output_format == "json"


def test_load_yaml(tmp_path):
    path = tmp_path / 'config.yaml'
    write_file(path, "dt: 0.2\nbootstrap_samples: 1000\ntte_grid: [120, 300]\n")
    cfg = Config(config_file=str(path))
    assert cfg.app_config.dt == 0.2
    assert cfg.app_config.bootstrap_samples == 1000
    assert cfg.app_config.tte_grid == [120, 300]


def test_invalid_file_keeps_defaults(tmp_path):
    path = tmp_path / 'config.json'
    write_file(path, json.dumps({"dt": -1.0}))
    cfg = Config(config_file=str(path))
    assert cfg.app_config.dt == 0.1

    write_file(path, "{not json")
    cfg = Config(config_file=str(path))
    assert cfg.app_config.dt == 0.1


def test_validate_messages():
    app = AppConfig(output_format="xml", fit_population=4)
    valid, message = app.validate()
    assert not valid
    assert "csv" in message
    assert "fit_population" in message


def test_save_creates_backup(tmp_path):
    path = tmp_path / 'sub' / 'config.json'
    cfg = Config(config_file=str(path))
    assert cfg.save_config()
    cfg.app_config.seed = 42
    assert cfg.save_config()
    backup = Path(str(path) + '.backup')
    assert backup.exists()
    assert json.loads(backup.read_text(encoding='utf-8'))['seed'] == 0
    assert Config(config_file=str(path)).app_config.seed == 42


def test_save_yaml(tmp_path):
    path = tmp_path / 'config.yml'
    cfg = Config(config_file=str(path))
    cfg.app_config.curve_step = 5.0
    assert cfg.save_config()
    assert Config(config_file=str(path)).app_config.curve_step == 5.0


def test_output_dir(tmp_path):
    cfg = Config(config_file=str(tmp_path / 'config.json'))
    cfg.app_config.output_dir = str(tmp_path / 'results')
    cfg.ensure_dirs()
    assert cfg.get_output_dir().is_dir()


def test_threads_env_caps_workers(monkeypatch, tmp_path):
    monkeypatch.setenv(THREADS_ENV, "2")
    assert resolve_workers(16) <= 2
    assert resolve_workers() <= 2
    cfg = Config(config_file=str(tmp_path / 'config.json'))
    assert cfg.worker_count() <= 2
    monkeypatch.setenv(THREADS_ENV, "junk")
    assert resolve_workers(1) == 1


def test_batch_processor_keeps_order():
    processor = BatchProcessor(max_workers=4)
    seen = []
    result = processor.map(lambda x: x * x, range(10), progress_callback=lambda i, n: seen.append((i, n)))
    assert result == [x * x for x in range(10)]
    assert len(seen) == 10
    assert all(n == 10 for _, n in seen)
