import math

from facehall.report import (
    METHODS,
    ReportRow,
    build_report,
    format_table,
    render_figures,
    write_csv,
)


def sample_rows():
    rows = []
    for i, sid in enumerate(("a", "b")):
        rows.append(ReportRow(sid, "bicubic", 24.0 + i, 0.80 + 0.01 * i))
        rows.append(ReportRow(sid, "cnn_only", 25.0 + i, 0.82 + 0.01 * i))
        rows.append(ReportRow(sid, "lcge", 26.0 + i, 0.84 + 0.01 * i))
    return rows


class TestBuildReport:
    def test_means(self):
        report = build_report(sample_rows())
        assert abs(report.summaries["bicubic"].mean_psnr - 24.5) < 1e-12
        assert abs(report.summaries["lcge"].mean_ssim - 0.845) < 1e-12

    def test_method_order(self):
        report = build_report(sample_rows())
        assert tuple(report.summaries) == METHODS

    def test_infinite_rows_excluded_from_psnr_mean(self):
        rows = sample_rows() + [ReportRow("c", "bicubic", float("inf"), 1.0)]
        report = build_report(rows)
        s = report.summaries["bicubic"]
        assert s.inf_count == 1
        assert abs(s.mean_psnr - 24.5) < 1e-12

    def test_all_infinite(self):
        rows = [ReportRow("a", "lcge", float("inf"), 1.0)]
        s = build_report(rows).summaries["lcge"]
        assert math.isinf(s.mean_psnr)
        assert s.inf_count == 1


class TestCsv:
    def test_header_and_formatting(self, tmp_path):
        path = tmp_path / "r.csv"
        write_csv(build_report(sample_rows()), path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "id,method,psnr,ssim"
        assert lines[1] == "a,bicubic,24.000000,0.800000"
        assert len(lines) == 7

    def test_infinity_spelled_out(self, tmp_path):
        path = tmp_path / "i.csv"
        write_csv(build_report([ReportRow("a", "lcge", float("inf"), 1.0)]), path)
        assert "a,lcge,inf,1.000000" in path.read_text(encoding="utf-8")

    def test_byte_stable(self, tmp_path):
        p1, p2 = tmp_path / "1.csv", tmp_path / "2.csv"
        write_csv(build_report(sample_rows()), p1)
        write_csv(build_report(sample_rows()), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestTableAndFigures:
    def test_table_lists_all_methods(self):
        text = format_table(build_report(sample_rows()))
        for m in METHODS:
            assert m in text

    def test_figures_written(self, tmp_path):
        paths = render_figures(build_report(sample_rows()), tmp_path)
        assert len(paths) == 2
        for p in paths:
            assert p.exists() and p.stat().st_size > 0
        names = {p.name for p in paths}
        assert names == {"report_psnr.png", "report_ssim.png"}
