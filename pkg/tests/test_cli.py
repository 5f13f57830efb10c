import numpy as np
import pytest

from facehall.cli import main
from facehall.image import load_image


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Dataset, trained models, and databases shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert main(["make-dataset", str(data), "--subjects", "3",
                 "--width", "96", "--height", "80", "--seed", "0"]) == 0
    common = ["--epochs", "1", "--sample-size", "15"]
    assert main(["train", str(data / "manifest.tsv"), str(root / "models")] + common) == 0
    assert main(["build-db", str(data / "manifest.tsv"), str(root / "models"),
                 str(root / "db")] + common) == 0
    return root


class TestMakeDataset:
    def test_creates_manifest_and_files(self, tmp_path):
        out = tmp_path / "ds"
        assert main(["make-dataset", str(out), "--subjects", "2",
                     "--width", "96", "--height", "80"]) == 0
        assert (out / "manifest.tsv").exists()
        assert (out / "face_000.png").exists()
        assert (out / "face_001.txt").exists()


class TestTrainAndBuildDb:
    def test_artifacts_exist(self, workspace):
        for cat in ("eyes", "eyebrows", "nose", "mouth", "remainder"):
            assert (workspace / "models" / f"{cat}.net").exists()
        for cat in ("eyes", "eyebrows", "nose", "mouth"):
            assert (workspace / "db" / f"{cat}.pdb").exists()
        # remainder unenhanced by default: no database for it
        assert not (workspace / "db" / "remainder.pdb").exists()


class TestHallucinate:
    def test_writes_scaled_image(self, workspace, tmp_path):
        # build a true low-resolution input; landmarks stay in output space
        from facehall.image import ColorImage, save_image, downsample, load_image as li

        hr = li(workspace / "data" / "face_000.png")
        lr = ColorImage(y=downsample(hr.y, 4), cb=downsample(hr.cb, 4), cr=downsample(hr.cr, 4))
        lr_path = tmp_path / "lr.png"
        save_image(lr, lr_path)
        out_path = tmp_path / "out.png"
        code = main([
            "hallucinate", str(lr_path), str(workspace / "data" / "face_000.txt"),
            str(out_path), "--model-dir", str(workspace / "models"),
            "--db-dir", str(workspace / "db"),
            "--stride", "2", "--window-radius", "6",
        ])
        assert code == 0
        out = load_image(out_path)
        assert (out.height, out.width) == (80, 96)

    def test_bicubic_method_needs_no_models(self, workspace, tmp_path):
        from facehall.image import ColorImage, save_image, downsample, load_image as li

        hr = li(workspace / "data" / "face_001.png")
        lr_path = tmp_path / "lr.png"
        save_image(ColorImage(y=downsample(hr.y, 4)), lr_path)
        out_path = tmp_path / "b.png"
        code = main(["hallucinate", str(lr_path),
                     str(workspace / "data" / "face_001.txt"), str(out_path),
                     "--method", "bicubic"])
        assert code == 0

    def test_missing_input_exits_one(self, workspace, tmp_path, capsys):
        code = main(["hallucinate", str(tmp_path / "nope.png"),
                     str(workspace / "data" / "face_000.txt"),
                     str(tmp_path / "o.png")])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestEvaluate:
    def test_writes_csv_and_figures(self, workspace, tmp_path):
        out = tmp_path / "results"
        code = main(["evaluate", str(workspace / "data" / "manifest.tsv"), str(out),
                     "--epochs", "1", "--sample-size", "15",
                     "--stride", "2", "--window-radius", "6"])
        assert code == 0
        csv = (out / "report.csv").read_text(encoding="utf-8")
        assert csv.startswith("id,method,psnr,ssim\n")
        assert csv.count("\n") == 1 + 3 * 3
        assert (out / "report_psnr.png").exists()
        assert (out / "report_ssim.png").exists()

    def test_no_figures_flag(self, workspace, tmp_path):
        out = tmp_path / "nofig"
        code = main(["evaluate", str(workspace / "data" / "manifest.tsv"), str(out),
                     "--epochs", "1", "--sample-size", "15",
                     "--stride", "2", "--window-radius", "6", "--no-figures"])
        assert code == 0
        assert (out / "report.csv").exists()
        assert not (out / "report_psnr.png").exists()

    def test_identical_runs_byte_identical_csv(self, workspace, tmp_path):
        args_tail = ["--epochs", "1", "--sample-size", "15",
                     "--stride", "2", "--window-radius", "6", "--no-figures"]
        man = str(workspace / "data" / "manifest.tsv")
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["evaluate", man, str(out1)] + args_tail) == 0
        assert main(["evaluate", man, str(out2), "--workers", "2"] + args_tail) == 0
        b1 = (out1 / "report.csv").read_bytes()
        b2 = (out2 / "report.csv").read_bytes()
        assert b1 == b2


class TestConfigPlumbing:
    def test_config_file_applies(self, workspace, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("scale = 2\nepochs = 1\nsample_size = 15\n", encoding="utf-8")
        out = tmp_path / "cfgrun"
        code = main(["evaluate", str(workspace / "data" / "manifest.tsv"), str(out),
                     "--config", str(cfg), "--no-figures",
                     "--stride", "2", "--window-radius", "6"])
        assert code == 0
        assert "scale" not in capsys.readouterr().err

    def test_bad_config_value_exits_one(self, workspace, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("scale = 0\n", encoding="utf-8")
        code = main(["evaluate", str(workspace / "data" / "manifest.tsv"),
                     str(tmp_path / "x"), "--config", str(cfg)])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
