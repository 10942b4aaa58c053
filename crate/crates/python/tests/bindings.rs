use pyo3::prelude::*;
use pyo3::types::PyDict;

/// Runs `code` with the module bound to `wq`.
fn run(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(pywavquant::pywavquant)(py);
        let globals = PyDict::new(py);
        globals.set_item("wq", module).unwrap();
        if let Err(err) = py.run(code, Some(&globals), None) {
            err.display(py);
            panic!("python code failed: {err}");
        }
    });
}

#[test]
fn embed_extract_round_trip() {
    run(c"
clip = wq.synth('chirp', 2.0, 3)
key = wq.EmbedKey(pn_seed=99)
bits = [i % 3 % 2 for i in range(key.capacity(len(clip)))]
marked, report, side = wq.embed(clip, bits, key)
assert report.payload_bits == len(bits)
got = wq.extract(marked.quantized(), key, side)
assert got.decoder == 'side_info'
assert got.payload(len(bits)) == bits
assert got.sync_offsets == [0, 0, 0, 0]
assert wq.ber(bits, got.bits) == 0.0
");
}

#[test]
fn key_text_round_trip_and_validation() {
    run(c"
key = wq.EmbedKey(quant_step=52000, group_size=8, scaling_mode='fixed_ones', pn_seed=2**63 + 5)
back = wq.EmbedKey.parse(key.to_text())
assert (back.quant_step, back.group_size, back.scaling_budget) == (52000, 8, 8)
assert back.scaling_mode == 'fixed_ones' and back.pn_seed == 2**63 + 5
for bad in [dict(quant_step=-1), dict(wavelet='sym5'), dict(sync_length=4, sync_max_errors=2)]:
    try:
        wq.EmbedKey(**bad)
    except wq.WavquantError:
        pass
    else:
        raise AssertionError(bad)
");
}

#[test]
fn errors_map_to_python_exceptions() {
    run(c"
clip = wq.AudioClip([0.0] * 4096, 44100)
key = wq.EmbedKey()
try:
    wq.embed(clip, [1] * 1000, key)
except wq.CapacityError as e:
    assert issubclass(wq.CapacityError, wq.WavquantError)
else:
    raise AssertionError('capacity')
try:
    wq.attack(clip, 'echo:2')
except wq.WavquantError:
    pass
else:
    raise AssertionError('attack')
try:
    wq.SideInfo.load('/nonexistent/side.txt')
except OSError:
    pass
else:
    raise AssertionError('io')
");
}

#[test]
fn quantizer_and_wavelet_functions() {
    run(c"
import math
sig = [math.sin(0.1 * i) for i in range(256)]
approx, details = wq.dwt(sig, 'haar', 3)
assert len(approx) == 32 and [len(d) for d in details] == [32, 64, 128]
assert max(abs(a - b) for a, b in zip(sig, wq.idwt(approx, details, 'haar'))) < 1e-12
a = wq.optimal_scaling_factors([1.0, 2.0, 3.0, 4.0], 10.0, 4.0)
assert a is not None and abs(sum(a) - 4) < 1e-12
assert abs(sum(x * c for x, c in zip(a, [1, 2, 3, 4])) - 10) < 1e-9
assert wq.optimal_scaling_factors([1.0, 2.0], 10.0, 2.0) is None
new = wq.embed_bit_fixed([1.0, 2.0, 3.0, 4.0], [1, 1, 1, 1], 1, 3.0)
assert wq.extract_bit(new, [1, 1, 1, 1], 3.0) == 1
");
}
