"""Rate accounting, evaluation reports and the evaluation run."""

import dataclasses
import os

import numpy as np
import pandas as pd
import pytest
import yaml

from guidedicm.codec import machine
from guidedicm.commons import constants, imaging, keys
from guidedicm.commons.config import config_from_dict, config_to_dict
from guidedicm.dataset import procedural
from guidedicm.evaluator import embedders, evaluate, rate
from guidedicm.evaluator.evaluate import EvalReport
from guidedicm.generator import color, decode
from tests.conftest import tiny_document


def aggregates():
    return {
        'machine_decode': {'psnr': 20.0, 'fid': 9.0},
        'human_decode': {'psnr': 18.0, 'fid': 4.0},
        'human_decode_cc': {'psnr': 19.0, 'fid': 3.5},
    }


class TestRateAccounting:
    def test_zero_extension(self):
        evaluate.check_rate_accounting(0.4, 0.0, 0.4)

    @pytest.mark.parametrize('rates', [(0.4, 0.1, 0.5), (0.4, 0.0, 0.41)])
    def test_rejects_extra_bits(self, rates):
        with pytest.raises(ValueError):
            evaluate.check_rate_accounting(*rates)

    def test_report_checks_accounting(self):
        with pytest.raises(ValueError):
            EvalReport(pd.DataFrame(), aggregates(), 0.4, 0.01, 0.41)


class TestEvalReport:
    def test_rate_points(self):
        report = EvalReport(pd.DataFrame(), aggregates(), 0.4, 0.0, 0.4)
        points = {
            (point.codec, point.metric): point for point in report.rate_points(['fid'])
        }
        assert points['machine', 'fid'].bpp == 0.4
        assert points['machine', 'fid'].value == 9.0
        assert points['ours', 'fid'].bpp == 0.0
        assert points['ours', 'fid'].value == 4.0
        assert points['ours_cc', 'fid'].value == 3.5
        assert points['ours_total', 'fid'].bpp == 0.4
        assert points['ours_cc_total', 'fid'].bpp == 0.4

    def test_save(self, tmp_path):
        records = pd.DataFrame([{'image': 'a.png', 'machine_bpp': 0.4}])
        report = EvalReport(records, aggregates(), 0.4, 0.0, 0.4)
        report.save(str(tmp_path / 'r' / 'report.yaml'), str(tmp_path / 'r' / 'img.csv'))
        with open(tmp_path / 'r' / 'report.yaml') as fin:
            saved = yaml.safe_load(fin)
        assert saved['extension_bpp'] == 0.0
        assert saved['total_bpp'] == saved['machine_bpp'] == 0.4
        assert saved['aggregates']['human_decode_cc']['fid'] == 3.5
        assert len(pd.read_csv(tmp_path / 'r' / 'img.csv')) == 1

    def test_rate_points_without_color_controller(self):
        report = EvalReport(pd.DataFrame(), aggregates(), 0.4, 0.0, 0.4, cc=False)
        codecs = {point.codec for point in report.rate_points(['psnr', 'fid'])}
        assert codecs == {'machine', 'ours', 'ours_total'}
        assert report.to_dict()['cc'] is False
        # Both aggregates are kept whatever the flag
        assert report.aggregates['human_decode_cc']['psnr'] == 19.0


class TestSetLevelSize:
    def test_single_image_with_set_metrics(self):
        with pytest.raises(ValueError):
            evaluate.check_set_level_size(['fid', 'kid'], 1)

    @pytest.mark.parametrize('set_level, images', [([], 1), (['kid'], 2)])
    def test_accepted(self, set_level, images):
        evaluate.check_set_level_size(set_level, images)

    def test_checked_before_decoding(self, tmp_path, monkeypatch):
        document = tiny_document(
            tmp_path / 'work', dataset={'eval_count': 1}, eval={'metrics': ['psnr']}
        )
        cfg = config_from_dict(document)
        procedural.prepare_dataset(cfg)
        cfg = dataclasses.replace(
            cfg, eval=dataclasses.replace(cfg.eval, metrics=('psnr', 'fid'))
        )

        def no_decoder(*args, **kwargs):
            pytest.fail('checkpoints loaded before the set-level check')

        monkeypatch.setattr(evaluate.decode, 'load_decoder', no_decoder)
        with pytest.raises(ValueError, match='fid'):
            evaluate.run_eval(cfg)


@pytest.mark.slow
class TestRunEval:
    def test_report_and_outputs(self, checkpoint_pair):
        cfg = checkpoint_pair
        report = evaluate.run_eval(cfg)

        assert report.extension_bpp == 0.0
        assert report.total_bpp == report.machine_bpp > 0.0
        assert len(report.records) == cfg.dataset.eval_count
        for kind in evaluate.DECODE_KINDS:
            assert set(report.aggregates[kind]) >= {'psnr', 'ssim', 'lpips', 'fid', 'kid'}
        assert report.aggregates['machine_decode']['psnr'] < 99.0

        for relative in (
            constants.EVAL_REPORT,
            constants.EVAL_RECORDS,
            constants.RATE_POINTS,
        ):
            assert os.path.isfile(cfg.path(relative))
        bitstreams = os.listdir(cfg.path(constants.BITSTREAMS_FOLDER))
        assert len(bitstreams) == cfg.dataset.eval_count
        assert all(name.endswith('.gmvb') for name in bitstreams)

        points = rate.import_rd_csv(cfg.path(constants.RATE_POINTS))
        assert {point.bpp for point in points if point.codec == 'ours'} == {0.0}

    def test_rerun_is_identical(self, checkpoint_pair):
        first = evaluate.run_eval(checkpoint_pair)
        second = evaluate.run_eval(checkpoint_pair)
        pd.testing.assert_frame_equal(first.records, second.records)
        assert first.machine_bpp == second.machine_bpp

    def test_mismatched_conditions_probe(self, checkpoint_pair):
        document = config_to_dict(checkpoint_pair)
        document['eval']['mismatched_probe'] = True
        document['eval']['metrics'] = ['psnr']
        report = evaluate.run_eval(config_from_dict(document))
        assert set(report.probes) == {
            evaluate.MATCHED_PROBE,
            evaluate.MISMATCHED_PROBE,
            evaluate.UNCONDITIONAL_PROBE,
        }
        # A fresh branch ignores its condition
        assert report.probes[evaluate.MATCHED_PROBE] == pytest.approx(
            report.probes[evaluate.UNCONDITIONAL_PROBE], abs=1e-4
        )
        assert np.isfinite(report.probes[evaluate.MISMATCHED_PROBE])

    def test_color_controller_flag(self, checkpoint_pair):
        def written(cfg):
            folder = cfg.path(constants.HUMAN_DECODES)
            return {
                name: imaging.load_image(os.path.join(folder, name))
                for name in sorted(os.listdir(folder))
            }

        document = config_to_dict(checkpoint_pair)
        document['eval']['metrics'] = ['psnr']
        document['sampling']['cc'] = False
        plain_cfg = config_from_dict(document)
        plain = evaluate.run_eval(plain_cfg)
        plain_images = written(plain_cfg)

        document['sampling']['cc'] = True
        cc_cfg = config_from_dict(document)
        with_cc = evaluate.run_eval(cc_cfg)
        cc_images = written(cc_cfg)

        assert len(plain_images) == checkpoint_pair.dataset.eval_count
        assert {p.codec for p in plain.rate_points(['psnr'])} == {
            'machine',
            'ours',
            'ours_total',
        }
        assert 'ours_cc' in {p.codec for p in with_cc.rate_points(['psnr'])}
        # Both variants are measured either way
        assert plain.aggregates == with_cc.aggregates

        for name, image in plain_images.items():
            stem = os.path.splitext(name)[0]
            bitstream = machine.read_bitstream(
                os.path.join(
                    cc_cfg.path(constants.BITSTREAMS_FOLDER),
                    stem + constants.BITSTREAM_EXTENSION,
                )
            )
            expected = color.apply_cc(image, machine.decode_machine(bitstream))
            assert np.mean(np.abs(cc_images[name] - expected)) < 0.01
        assert any(
            not np.array_equal(plain_images[name], cc_images[name]) for name in plain_images
        )

    def test_single_image_skips_shifted_pairing(self, checkpoint_pair, caplog):
        cfg = checkpoint_pair
        decoder = decode.load_decoder(
            cfg.path(constants.BASE_CHECKPOINT), cfg.path(constants.CONTROL_CHECKPOINT)
        )
        _, originals = procedural.load_split(cfg, keys.TEST)
        image = originals[0]
        with caplog.at_level('WARNING', logger='guidedicm.evaluator.evaluate'):
            probes = evaluate.conditioning_probes(
                decoder, [image], [image], [image], [0], cfg, embedders.init_embedder()
            )
        assert evaluate.MISMATCHED_PROBE not in probes
        assert set(probes) == {evaluate.MATCHED_PROBE, evaluate.UNCONDITIONAL_PROBE}
        assert 'mismatched conditions probe' in caplog.text
