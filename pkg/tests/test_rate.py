"""RD CSV interchange, bitrate comparisons and RD plots."""

import pytest

from guidedicm.commons.exceptions import RatePointError
from guidedicm.evaluator import rate
from guidedicm.evaluator.rate import RatePoint

HEADER = 'codec,metric,bpp,value\n'


def write_csv(tmp_path, body, name='points.csv'):
    path = tmp_path / name
    path.write_text(HEADER + body)
    return str(path)


def delta(table, codec, metric):
    row = table[(table.codec == codec) & (table.metric == metric)]
    assert len(row) == 1
    return float(row.delta_percent.iloc[0])


class TestImport:
    def test_rows(self, tmp_path):
        path = write_csv(
            tmp_path, 'TCM,lpips_matched,0.137,0\nOurs,detection_matched,0.227,0\n'
        )
        assert rate.import_rd_csv(path) == [
            RatePoint('TCM', 'lpips_matched', 0.137, 0.0),
            RatePoint('Ours', 'detection_matched', 0.227, 0.0),
        ]

    def test_empty_file(self, tmp_path):
        path = tmp_path / 'empty.csv'
        path.write_text('')
        assert rate.import_rd_csv(str(path)) == []

    def test_header_only(self, tmp_path):
        assert rate.import_rd_csv(write_csv(tmp_path, '')) == []

    def test_unknown_metric_reports_line(self, tmp_path):
        path = write_csv(tmp_path, 'TCM,psnr,0.1,30\nTCM,bleu,0.2,1\n')
        with pytest.raises(RatePointError, match='line 3'):
            rate.import_rd_csv(path)

    def test_bad_number(self, tmp_path):
        with pytest.raises(RatePointError, match='line 2'):
            rate.import_rd_csv(write_csv(tmp_path, 'TCM,psnr,fast,30\n'))

    def test_negative_bpp(self, tmp_path):
        with pytest.raises(RatePointError):
            rate.import_rd_csv(write_csv(tmp_path, 'TCM,psnr,-0.1,30\n'))

    def test_bad_header(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text('name,metric,bpp,value\nTCM,psnr,0.1,30\n')
        with pytest.raises(RatePointError):
            rate.import_rd_csv(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            rate.import_rd_csv(str(tmp_path / 'none.csv'))

    def test_export_then_import(self, tmp_path):
        points = [RatePoint('machine', 'psnr', 0.05, 21.5), RatePoint('ours', 'fid', 0.0, 3.25)]
        path = str(tmp_path / 'out' / 'points.csv')
        rate.export_rd_csv(points, path)
        assert rate.import_rd_csv(path) == points


class TestCompare:
    def test_published_rates(self):
        table = rate.compare_bitrates(rate.load_published_rates(), 'TCM')
        assert delta(table, 'Ours', 'lpips_matched') == pytest.approx(65.69, abs=1e-9)
        assert delta(table, 'Ours', 'fid_matched') == pytest.approx(-68.03, abs=1e-9)
        assert delta(table, 'Ours', 'detection_matched') == pytest.approx(
            -36.23, abs=0.02
        )
        assert 'TCM' not in set(table.codec)

    def test_missing_reference(self):
        points = [RatePoint('Ours', 'psnr', 0.2, 30.0)]
        with pytest.raises(RatePointError):
            rate.compare_bitrates(points, 'TCM')

    def test_ambiguous_reference(self):
        points = [
            RatePoint('TCM', 'psnr', 0.1, 30.0),
            RatePoint('TCM', 'psnr', 0.2, 32.0),
            RatePoint('Ours', 'psnr', 0.2, 30.0),
        ]
        with pytest.raises(RatePointError):
            rate.compare_bitrates(points, 'TCM')


class TestPlot:
    def test_single_point(self, tmp_path):
        out = str(tmp_path / 'plots' / 'rd_psnr.png')
        rate.plot_rd([RatePoint('machine', 'psnr', 0.05, 21.5)], 'psnr', out)
        with open(out, 'rb') as fin:
            assert fin.read(8) == b'\x89PNG\r\n\x1a\n'

    def test_no_points_for_metric(self, tmp_path):
        with pytest.raises(RatePointError):
            rate.plot_rd(
                [RatePoint('machine', 'psnr', 0.05, 21.5)],
                'fid',
                str(tmp_path / 'rd_fid.png'),
            )

    def test_plot_all_skips_absent_metrics(self, tmp_path):
        points = [
            RatePoint('machine', 'psnr', 0.05, 21.5),
            RatePoint('ours', 'psnr', 0.0, 18.0),
            RatePoint('ours_total', 'psnr', 0.05, 18.0),
        ]
        written = rate.plot_all(points, str(tmp_path))
        assert written == [rate.plot_path(str(tmp_path), 'psnr')]

    def test_metric_label(self):
        assert rate.metric_label('psnr') == 'PSNR [dB] (↑)'
        assert rate.metric_label('fid_matched') == 'FID_MATCHED'
