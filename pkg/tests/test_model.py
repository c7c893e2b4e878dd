import math

import pytest
import torch

from seggloss.errors import DecoderUnavailableError, SegglossError, SequenceTooLongError
from seggloss.model import (
    GLOSS,
    SEGMENTATION,
    ModelConfig,
    SegGlossModel,
    load_checkpoint,
    save_checkpoint,
    sinusoidal_positions,
)
from seggloss.vocab import BOS, PAD, build_vocabularies


def small_model(multitask: bool = True, **overrides) -> SegGlossModel:
    defaults = dict(
        encoder_layers=1,
        decoder_layers=1,
        attention_heads=2,
        embedding_dim=8,
        hidden_dim=16,
        dropout=0.0,
        attention_dropout=0.0,
        max_positions=16,
    )
    defaults.update(overrides)
    config = ModelConfig(**defaults)
    model = SegGlossModel(
        config,
        source_vocab_size=10,
        segmentation_vocab_size=10,
        gloss_vocab_size=10 if multitask else None,
    )
    model.eval()
    return model


def src_batch(*rows):
    return torch.tensor(list(rows), dtype=torch.long)


class TestModelConfig:
    def test_defaults(self):
        config = ModelConfig()
        assert (config.encoder_layers, config.decoder_layers) == (4, 4)
        assert (config.attention_heads, config.embedding_dim, config.hidden_dim) == (4, 256, 1024)
        assert config.dropout == config.attention_dropout == 0.1

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"embedding_dim": 10, "attention_heads": 4},
            {"encoder_layers": 0},
            {"decoder_layers": -1},
            {"hidden_dim": 0},
            {"dropout": 1.0},
            {"attention_dropout": -0.1},
            {"max_positions": 0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ModelConfig(**kwargs)


class TestSinusoidalPositions:
    def test_shape(self):
        assert sinusoidal_positions(7, 6).shape == (7, 6)

    def test_position_zero_alternates_zero_one(self):
        table = sinusoidal_positions(3, 8)
        assert torch.allclose(table[0, 0::2], torch.zeros(4))
        assert torch.allclose(table[0, 1::2], torch.ones(4))

    def test_pairwise_unit_norm(self):
        table = sinusoidal_positions(12, 8)
        squares = table[:, 0::2] ** 2 + table[:, 1::2] ** 2
        assert torch.allclose(squares, torch.ones_like(squares), atol=1e-6)

    def test_odd_dimension_supported(self):
        table = sinusoidal_positions(4, 7)
        assert table.shape == (4, 7)
        assert torch.isfinite(table).all()


class TestForwardContract:
    def test_encode_shape(self):
        model = small_model()
        states = model.encode(src_batch([4, 5, 6], [4, 5, PAD]))
        assert states.shape == (2, 3, 8)

    def test_decode_shape_and_normalization(self):
        model = small_model()
        src = src_batch([4, 5, 6])
        states = model.encode(src)
        prefix = torch.tensor([[BOS, 4, 5]])
        log_probs = model.decode(SEGMENTATION, states, src != PAD, prefix)
        assert log_probs.shape == (1, 3, 10)
        totals = log_probs.exp().sum(dim=-1)
        assert torch.allclose(totals, torch.ones_like(totals), atol=1e-5)

    def test_decode_step_is_last_position(self):
        model = small_model()
        src = src_batch([4, 5, 6])
        states = model.encode(src)
        prefix = torch.tensor([[BOS, 4, 5]])
        full = model.decode(SEGMENTATION, states, src != PAD, prefix)
        step = model.decode_step(SEGMENTATION, states, src != PAD, prefix)
        assert torch.equal(step, full[:, -1, :])

    def test_pad_positions_do_not_leak(self):
        # the same word encoded alone and inside a padded batch must agree
        model = small_model()
        alone = src_batch([4, 5, 6])
        padded = src_batch([4, 5, 6, PAD, PAD], [7, 8, 9, 7, 8])
        states_alone = model.encode(alone)
        states_padded = model.encode(padded)
        assert torch.allclose(states_alone[0], states_padded[0, :3], atol=1e-6)

    def test_pad_invariant_decoding(self):
        model = small_model()
        alone = src_batch([4, 5, 6])
        padded = src_batch([4, 5, 6, PAD, PAD])
        prefix = torch.tensor([[BOS, 4]])
        step_alone = model.decode_step(SEGMENTATION, model.encode(alone), alone != PAD, prefix)
        step_padded = model.decode_step(SEGMENTATION, model.encode(padded), padded != PAD, prefix)
        assert torch.allclose(step_alone, step_padded, atol=1e-6)

    def test_causal_masking(self):
        # appending a symbol must not disturb distributions at earlier steps
        model = small_model()
        src = src_batch([4, 5, 6])
        states = model.encode(src)
        mask = src != PAD
        short = model.decode(SEGMENTATION, states, mask, torch.tensor([[BOS, 4]]))
        long = model.decode(SEGMENTATION, states, mask, torch.tensor([[BOS, 4, 9]]))
        assert torch.allclose(short, long[:, :2, :], atol=1e-6)

    def test_zeroed_projection_gives_uniform(self):
        model = small_model()
        stack = model.stack(SEGMENTATION)
        with torch.no_grad():
            stack.proj.weight.zero_()
            stack.proj.bias.zero_()
        src = src_batch([4, 5])
        step = model.decode_step(SEGMENTATION, model.encode(src), src != PAD, torch.tensor([[BOS]]))
        expected = torch.full((1, 10), -math.log(10))
        assert torch.allclose(step, expected, atol=1e-6)

    def test_eval_mode_deterministic(self):
        model = small_model(dropout=0.3, attention_dropout=0.3)
        src = src_batch([4, 5, 6])
        assert torch.equal(model.encode(src), model.encode(src))

    def test_pad_embedding_row_is_zero(self):
        model = small_model()
        assert torch.equal(model.src_embed.embed.weight[PAD], torch.zeros(8))


class TestErrors:
    def test_single_task_has_no_gloss_decoder(self):
        model = small_model(multitask=False)
        assert not model.multitask
        with pytest.raises(DecoderUnavailableError):
            model.stack(GLOSS)

    def test_unknown_stream_rejected(self):
        with pytest.raises(ValueError):
            small_model().stack("translation")

    def test_empty_input_rejected(self):
        model = small_model()
        with pytest.raises(SegglossError):
            model.encode(torch.zeros(1, 0, dtype=torch.long))
        with pytest.raises(SegglossError):
            model.encode(src_batch([PAD, PAD]))

    def test_sequence_too_long(self):
        model = small_model(max_positions=4)
        with pytest.raises(SequenceTooLongError):
            model.encode(src_batch([4] * 5))

    def test_prefix_must_start_with_bos(self):
        model = small_model()
        src = src_batch([4, 5])
        states = model.encode(src)
        with pytest.raises(SegglossError):
            model.decode(SEGMENTATION, states, src != PAD, torch.tensor([[4, 5]]))
        with pytest.raises(SegglossError):
            model.decode(SEGMENTATION, states, src != PAD, torch.zeros(1, 0, dtype=torch.long))


class TestParameterCount:
    # Hand tally for d=8, h=2, hidden=16, 1+1 layers, all vocabs 10:
    #   embedding        10*8                            =   80
    #   attention        4 * (8*8 + 8)                   =  288
    #   feed-forward     (8*16 + 16) + (16*8 + 8)        =  280
    #   layer norm       2*8                             =   16
    #   encoder layer    288 + 280 + 2*16                =  600
    #   decoder layer    2*288 + 280 + 3*16              =  904
    #   output proj      8*10 + 10                       =   90
    #   decoder stack    80 + 904 + 90                   = 1074
    ENCODER_TOTAL = 80 + 600
    DECODER_STACK = 1074

    def test_single_task_count(self):
        model = small_model(multitask=False)
        assert model.count_parameters() == self.ENCODER_TOTAL + self.DECODER_STACK == 1754

    def test_multitask_count(self):
        model = small_model(multitask=True)
        assert model.count_parameters() == self.ENCODER_TOTAL + 2 * self.DECODER_STACK == 2828

    def test_gloss_decoder_is_the_only_difference(self):
        multi = small_model(multitask=True)
        single = small_model(multitask=False)
        assert multi.count_parameters() - single.count_parameters() == self.DECODER_STACK


class TestSharedEncoder:
    def test_gloss_decoder_perturbation_leaves_encoder_output_unchanged(self):
        model = small_model()
        src = src_batch([4, 5, 6])
        before = model.encode(src).clone()
        with torch.no_grad():
            for param in model.stack(GLOSS).parameters():
                param.add_(1.0)
        assert torch.equal(model.encode(src), before)

    def test_decoders_do_not_share_parameters(self):
        model = small_model()
        seg_params = {id(p) for p in model.stack(SEGMENTATION).parameters()}
        gloss_params = {id(p) for p in model.stack(GLOSS).parameters()}
        assert not seg_params & gloss_params


class TestCheckpoint:
    def test_round_trip(self, tmp_path, tiny_examples):
        vocabs = build_vocabularies(tiny_examples)
        config = ModelConfig(
            encoder_layers=1,
            decoder_layers=1,
            attention_heads=2,
            embedding_dim=8,
            hidden_dim=16,
            dropout=0.0,
            attention_dropout=0.0,
            max_positions=16,
        )
        model = SegGlossModel(
            config,
            source_vocab_size=len(vocabs.source),
            segmentation_vocab_size=len(vocabs.segmentation),
            gloss_vocab_size=len(vocabs.gloss),
        )
        model.eval()
        path = tmp_path / "model.pt"
        save_checkpoint(path, model, vocabs, {"epoch": 3, "dev_accuracy": 87.5})

        loaded, loaded_vocabs, meta = load_checkpoint(path)
        assert meta == {"epoch": 3, "dev_accuracy": 87.5}
        assert loaded.multitask
        assert loaded.config == config
        assert loaded_vocabs.segmentation.to_list() == vocabs.segmentation.to_list()

        src = torch.tensor([[4, 5, 6]])
        prefix = torch.tensor([[BOS, 4]])
        original = model.decode_step(SEGMENTATION, model.encode(src), src != PAD, prefix)
        restored = loaded.decode_step(SEGMENTATION, loaded.encode(src), src != PAD, prefix)
        assert torch.equal(original, restored)

    def test_single_task_round_trip(self, tmp_path, tiny_examples):
        vocabs = build_vocabularies(tiny_examples)
        config = ModelConfig(
            encoder_layers=1,
            decoder_layers=1,
            attention_heads=2,
            embedding_dim=8,
            hidden_dim=16,
            dropout=0.0,
            attention_dropout=0.0,
            max_positions=16,
        )
        model = SegGlossModel(
            config,
            source_vocab_size=len(vocabs.source),
            segmentation_vocab_size=len(vocabs.segmentation),
        )
        path = tmp_path / "single.pt"
        save_checkpoint(path, model, vocabs, {})
        loaded, _, _ = load_checkpoint(path)
        assert not loaded.multitask
        with pytest.raises(DecoderUnavailableError):
            loaded.stack(GLOSS)
