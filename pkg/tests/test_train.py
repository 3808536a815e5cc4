"""Training loop: determinism, validation, and planted-instance behavior."""

import numpy as np
import pytest

from fuselink.autodiff import Tensor
from fuselink.errors import TrainingError
from fuselink.fusion import identity_params, init_params, params_to_arrays
from fuselink.losses import LossBatch, LossPair, npair_standard
from fuselink.mockdata import mock_generate
from fuselink.ranking import evaluate
from fuselink.train import epoch_order, train_model


def _small_bundle(noise=0.05, n=16, dim=8, candidates=6, seed=3):
    return mock_generate(seed=seed, n_samples=n, n_entities=n + 8, dim=dim,
                         noise_sigma=noise, n_candidates=candidates)


def test_epoch_order_is_deterministic_permutation():
    a = epoch_order(7, 3, 100)
    b = epoch_order(7, 3, 100)
    assert np.array_equal(a, b)
    assert sorted(a.tolist()) == list(range(100))
    assert not np.array_equal(epoch_order(7, 4, 100), a)
    assert not np.array_equal(epoch_order(8, 3, 100), a)


def test_zero_epochs_returns_initialization():
    bundle = _small_bundle()
    result = train_model(bundle, epochs=0, batch_size=4, learning_rate=1e-3,
                         seed=11, heads=2)
    init = params_to_arrays(init_params(11, bundle.features.dim, 2))
    got = params_to_arrays(result.params)
    assert init.keys() == got.keys()
    for name in init:
        assert np.array_equal(init[name], got[name])
    assert result.epoch_losses == []
    assert result.best_epoch == 0


def test_training_is_bitwise_deterministic():
    bundle = _small_bundle()
    a = train_model(bundle, epochs=3, batch_size=4, learning_rate=1e-3, seed=5, heads=2)
    b = train_model(bundle, epochs=3, batch_size=4, learning_rate=1e-3, seed=5, heads=2)
    assert a.epoch_losses == b.epoch_losses
    wa, wb = params_to_arrays(a.params), params_to_arrays(b.params)
    for name in wa:
        assert np.array_equal(wa[name], wb[name])


def test_planted_zero_noise_first_epoch_near_floor():
    bundle = _small_bundle(noise=0.0)
    ident = identity_params(bundle.features.dim, 2)

    # analytic per-sample loss at the planted optimum
    floor = 0.0
    for sample in bundle.samples:
        features = bundle.features.bundle_for(sample.id)
        fused = (features.image_seq[0] + features.expert[0]) + features.text_seq[0]
        cand = bundle.candidates[sample.id]
        negatives = np.stack([
            bundle.entity_embeddings.vector(eid)
            for eid in cand.entity_ids if eid != sample.gold_entity_id])
        pair = LossPair(fused=Tensor(fused.reshape(1, -1)),
                        positive=Tensor(bundle.entity_embeddings.vector(
                            sample.gold_entity_id).reshape(1, -1)),
                        negatives=Tensor(negatives))
        floor += npair_standard(LossBatch([pair])).item()
    floor /= len(bundle.samples)

    result = train_model(bundle, epochs=1, batch_size=4, learning_rate=1e-4,
                         seed=0, initial=ident)
    assert result.epoch_losses[0] == pytest.approx(floor, rel=0.02)


def test_training_improves_planted_recovery():
    bundle = _small_bundle(noise=0.05, n=24, dim=16, candidates=8)
    before = evaluate(bundle, init_params(9, 16, 2), ks=(1,)).accuracies[1]
    result = train_model(bundle, epochs=15, batch_size=8, learning_rate=1e-3,
                         seed=9, heads=2)
    after = evaluate(bundle, result.params, ks=(1,)).accuracies[1]
    assert after >= before
    assert after >= 0.9
    assert result.epoch_losses[-1] < result.epoch_losses[0]


def test_best_checkpoint_tracks_minimum():
    bundle = _small_bundle()
    result = train_model(bundle, epochs=5, batch_size=4, learning_rate=1e-3,
                         seed=2, heads=2)
    best = min(result.epoch_losses)
    assert result.epoch_losses[result.best_epoch - 1] == best


def test_missing_candidate_set_rejected():
    bundle = _small_bundle()
    del bundle.candidates[bundle.samples[0].id]
    with pytest.raises(TrainingError, match=bundle.samples[0].id):
        train_model(bundle, epochs=1, batch_size=4, learning_rate=1e-3, seed=0, heads=2)


def test_gold_missing_from_candidates_rejected():
    bundle = _small_bundle()
    sid = bundle.samples[0].id
    cand = bundle.candidates[sid]
    gold = bundle.samples[0].gold_entity_id
    keep = [i for i, eid in enumerate(cand.entity_ids) if eid != gold]
    cand.entity_ids = [cand.entity_ids[i] for i in keep]
    cand.scores = [cand.scores[i] for i in keep]
    with pytest.raises(TrainingError, match="gold"):
        train_model(bundle, epochs=1, batch_size=4, learning_rate=1e-3, seed=0, heads=2)


def test_degenerate_paper_batch_points_at_loss_mode():
    bundle = _small_bundle(n=4, dim=8, candidates=3, seed=1)
    # force a negative set orthogonal to everything the model can produce
    sid = bundle.samples[0].id
    cand = bundle.candidates[sid]
    gold = bundle.samples[0].gold_entity_id
    others = [eid for eid in cand.entity_ids if eid != gold]
    # plant negatives summing to zero similarity: n and -n
    base = bundle.entity_embeddings.vector(others[0]).copy()
    bundle.entity_embeddings.entries[others[0]] = base
    bundle.entity_embeddings.entries[others[1]] = -base
    with pytest.raises(TrainingError, match="loss_mode"):
        train_model(bundle, epochs=1, batch_size=1, learning_rate=1e-3, seed=1,
                    heads=2, loss_mode="paper")
