use lmd_autodiff::{PadMode, Tape, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::UafnoConfig;
use crate::error::{Error, Result};

/// Parameter tensors per encoder or decoder level.
const PER_LEVEL: usize = 4;
/// Parameter tensors per AFNO block.
pub const PER_BLOCK: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in `[-b, b]`, `b = fan_in^(-1/2)`.
    Uniform { fan_in: usize },
    /// Real and imaginary parts uniform in `[-b, b]`.
    ComplexUniform { fan_in: usize },
    Zeros,
    ComplexZeros,
    Ones,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    fn new(name: String, shape: &[usize], init: Init) -> Self {
        ParamSpec {
            name,
            shape: shape.to_vec(),
            init,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.init, Init::ComplexUniform { .. } | Init::ComplexZeros)
    }

    fn allocate(&self, rng: &mut ChaCha8Rng) -> Tensor {
        match self.init {
            Init::Uniform { fan_in } => Tensor::uniform(&self.shape, (fan_in as f64).recip().sqrt(), rng),
            Init::ComplexUniform { fan_in } => {
                Tensor::complex_uniform(&self.shape, (fan_in as f64).recip().sqrt(), rng)
            }
            Init::Zeros => Tensor::zeros(&self.shape),
            Init::ComplexZeros => Tensor::complex_zeros(&self.shape),
            Init::Ones => Tensor::full(&self.shape, 1.0),
        }
    }
}

fn conv_specs(out: &mut Vec<ParamSpec>, prefix: &str, cout: usize, cin: usize, k: usize) {
    out.push(ParamSpec::new(
        format!("{prefix}.w"),
        &[cout, cin, k, k],
        Init::Uniform { fan_in: cin * k * k },
    ));
    out.push(ParamSpec::new(format!("{prefix}.b"), &[cout], Init::Zeros));
}

/// Every parameter in traversal order: encoder levels, AFNO blocks, decoder
/// levels from deepest to shallowest, output head.
pub fn param_specs(cfg: &UafnoConfig) -> Result<Vec<ParamSpec>> {
    cfg.validate()?;
    let mut s = Vec::new();
    let mut cin = cfg.in_channels;
    for k in 0..cfg.enc_levels {
        let c = cfg.channels(k);
        conv_specs(&mut s, &format!("enc{k}.conv1"), c, cin, 3);
        conv_specs(&mut s, &format!("enc{k}.conv2"), c, c, 3);
        cin = c;
    }
    let (c, heads, dh, hid) = (cfg.latent_channels(), cfg.heads, cfg.head_dim(), cfg.mlp_hidden);
    for b in 0..cfg.n_blocks {
        let p = |n: &str| format!("afno{b}.{n}");
        s.push(ParamSpec::new(p("ln1.scale"), &[c], Init::Ones));
        s.push(ParamSpec::new(p("ln1.shift"), &[c], Init::Zeros));
        s.push(ParamSpec::new(p("mix.w"), &[heads, dh, dh], Init::ComplexUniform { fan_in: dh }));
        s.push(ParamSpec::new(p("mix.b"), &[heads, dh], Init::ComplexZeros));
        s.push(ParamSpec::new(p("ln2.scale"), &[c], Init::Ones));
        s.push(ParamSpec::new(p("ln2.shift"), &[c], Init::Zeros));
        s.push(ParamSpec::new(p("fc1.w"), &[c, hid], Init::Uniform { fan_in: c }));
        s.push(ParamSpec::new(p("fc1.b"), &[hid], Init::Zeros));
        s.push(ParamSpec::new(p("fc2.w"), &[hid, c], Init::Uniform { fan_in: hid }));
        s.push(ParamSpec::new(p("fc2.b"), &[c], Init::Zeros));
    }
    let mut up = c;
    for k in (0..cfg.enc_levels).rev() {
        let ck = cfg.channels(k);
        conv_specs(&mut s, &format!("dec{k}.conv1"), ck, up + ck, 3);
        conv_specs(&mut s, &format!("dec{k}.conv2"), ck, ck, 3);
        up = ck;
    }
    conv_specs(&mut s, "head", cfg.in_channels, up, 1);
    Ok(s)
}

/// Index ranges of the parameter groups inside the traversal order.
#[derive(Debug, Clone, Copy)]
struct Layout {
    levels: usize,
    blocks: usize,
}

impl Layout {
    fn new(cfg: &UafnoConfig) -> Self {
        Layout {
            levels: cfg.enc_levels,
            blocks: cfg.n_blocks,
        }
    }

    fn encoder(&self) -> std::ops::Range<usize> {
        0..PER_LEVEL * self.levels
    }

    fn block(&self, b: usize) -> std::ops::Range<usize> {
        let start = self.encoder().end + PER_BLOCK * b;
        start..start + PER_BLOCK
    }

    fn decoder(&self) -> std::ops::Range<usize> {
        let start = self.block(self.blocks).start;
        start..start + PER_LEVEL * self.levels + 2
    }
}

/// One AFNO token-mixing block on `x: [C, h, w]`:
/// `y = x + ifft2(shrink(gelu(mix(fft2(ln1 x)))))`, `z = y + mlp(ln2 y)`.
/// `p` holds the block's parameters in traversal order.
pub fn afno_block(tape: &Tape, p: &[Var], shrink: f64, x: Var) -> Result<Var> {
    if p.len() != PER_BLOCK {
        return Err(Error::Shape(format!("AFNO block takes {PER_BLOCK} parameters, got {}", p.len())));
    }
    let shape = tape.shape(x);
    if shape.len() != 3 {
        return Err(Error::Shape(format!("AFNO block expects [C, h, w], got {shape:?}")));
    }
    let t = tape.permute(x, &[1, 2, 0])?;
    let n1 = tape.layernorm(t, p[0], p[1])?;
    let f = tape.fft2(n1)?;
    let mut m = tape.gelu(tape.block_complex_linear(f, p[2], Some(p[3]))?);
    if shrink > 0.0 {
        m = tape.softshrink(m, shrink);
    }
    let y = tape.add(t, tape.ifft2(m)?)?;
    let n2 = tape.layernorm(y, p[4], p[5])?;
    let hidden = tape.gelu(tape.linear(n2, p[6], Some(p[7]))?);
    let z = tape.add(y, tape.linear(hidden, p[8], Some(p[9]))?)?;
    Ok(tape.permute(z, &[2, 0, 1])?)
}

/// A U-AFNO with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: UafnoConfig,
    specs: Vec<ParamSpec>,
    params: Vec<Tensor>,
}

impl Model {
    /// Allocate and initialize every parameter deterministically from `seed`.
    pub fn build(config: UafnoConfig, seed: u64) -> Result<Self> {
        let specs = param_specs(&config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = specs.iter().map(|s| s.allocate(&mut rng)).collect();
        Ok(Model { config, specs, params })
    }

    /// Assemble a model from existing tensors, checking them against `config`.
    pub fn from_parts(config: UafnoConfig, params: Vec<Tensor>) -> Result<Self> {
        let specs = param_specs(&config)?;
        if specs.len() != params.len() {
            return Err(Error::Incompatible(format!(
                "configuration needs {} tensors, got {}",
                specs.len(),
                params.len()
            )));
        }
        for (s, p) in specs.iter().zip(&params) {
            if s.shape != p.shape() || s.is_complex() != p.is_complex() {
                return Err(Error::Incompatible(format!(
                    "{}: expected {}{:?}, got {}{:?}",
                    s.name,
                    if s.is_complex() { "complex" } else { "real" },
                    s.shape,
                    if p.is_complex() { "complex" } else { "real" },
                    p.shape()
                )));
            }
        }
        Ok(Model { config, specs, params })
    }

    pub fn config(&self) -> &UafnoConfig {
        &self.config
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    /// Total real degrees of freedom.
    pub fn n_dof(&self) -> usize {
        self.params.iter().map(Tensor::dof).sum()
    }

    /// Put the parameters on `tape`, as leaves when `trainable`.
    pub fn bind(&self, tape: &Tape, trainable: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| if trainable { tape.leaf(p.clone()) } else { tape.constant(p.clone()) })
            .collect()
    }

    fn conv(&self, tape: &Tape, w: Var, b: Var, x: Var) -> Result<Var> {
        let pad = tape.shape(w)[2] / 2;
        Ok(tape.conv2d(x, w, Some(b), 1, pad, PadMode::from(self.config.padding))?)
    }

    fn conv_gelu(&self, tape: &Tape, w: Var, b: Var, x: Var) -> Result<Var> {
        Ok(tape.gelu(self.conv(tape, w, b, x)?))
    }

    /// Encoder: per level two 3x3 conv + GELU, then 2x2 mean pooling.
    /// Returns the latent and the pre-pooling activations.
    pub fn encode(&self, tape: &Tape, params: &[Var], x: Var) -> Result<(Var, Vec<Var>)> {
        let shape = tape.shape(x);
        let c = &self.config;
        if shape != [c.in_channels, c.height, c.width] {
            return Err(Error::Shape(format!(
                "model built for [{}, {}, {}] input, got {shape:?}",
                c.in_channels, c.height, c.width
            )));
        }
        let p = &params[Layout::new(c).encoder()];
        let mut h = x;
        let mut skips = Vec::with_capacity(c.enc_levels);
        for lv in p.chunks(PER_LEVEL) {
            h = self.conv_gelu(tape, lv[0], lv[1], h)?;
            h = self.conv_gelu(tape, lv[2], lv[3], h)?;
            skips.push(h);
            h = tape.down2(h)?;
        }
        Ok((h, skips))
    }

    /// All AFNO blocks in sequence.
    pub fn mix(&self, tape: &Tape, params: &[Var], latent: Var) -> Result<Var> {
        let layout = Layout::new(&self.config);
        let mut h = latent;
        for b in 0..self.config.n_blocks {
            h = afno_block(tape, &params[layout.block(b)], self.config.shrink, h)?;
        }
        Ok(h)
    }

    /// Decoder: per level upsample, concatenate the skip, two 3x3 conv + GELU;
    /// then a 1x1 conv to the input channel count. Returns pre-sigmoid values.
    pub fn decode(&self, tape: &Tape, params: &[Var], latent: Var, skips: &[Var]) -> Result<Var> {
        let c = &self.config;
        if skips.len() != c.enc_levels {
            return Err(Error::Shape(format!("{} skips for {} levels", skips.len(), c.enc_levels)));
        }
        let p = &params[Layout::new(c).decoder()];
        let mut h = latent;
        for (lv, &skip) in p.chunks(PER_LEVEL).zip(skips.iter().rev()) {
            let (hs, ss) = (tape.shape(h), tape.shape(skip));
            if ss.len() != 3 || hs.len() != 3 || ss[1] != 2 * hs[1] || ss[2] != 2 * hs[2] {
                return Err(Error::Shape(format!("skip {ss:?} does not match decoder state {hs:?}")));
            }
            h = tape.concat(&[tape.up2(h)?, skip])?;
            h = self.conv_gelu(tape, lv[0], lv[1], h)?;
            h = self.conv_gelu(tape, lv[2], lv[3], h)?;
        }
        let n = p.len();
        self.conv(tape, p[n - 2], p[n - 1], h)
    }

    /// Full network on `x: [C, H, W]` with parameters bound on `tape`.
    pub fn trace(&self, tape: &Tape, params: &[Var], x: Var) -> Result<Var> {
        let logits = self.trace_logits(tape, params, x)?;
        Ok(tape.sigmoid(logits)?)
    }

    /// [`Model::trace`] without the final sigmoid.
    pub fn trace_logits(&self, tape: &Tape, params: &[Var], x: Var) -> Result<Var> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "{} parameter variables for {} parameters",
                params.len(),
                self.params.len()
            )));
        }
        let (latent, skips) = self.encode(tape, params, x)?;
        let mixed = self.mix(tape, params, latent)?;
        self.decode(tape, params, mixed, &skips)
    }

    /// Predict the field one leap ahead; every entry lies in (0, 1).
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let tape = Tape::new();
        let params = self.bind(&tape, false);
        let xv = tape.constant(x.clone());
        let y = self.trace(&tape, &params, xv)?;
        let out = tape.value(y).clone();
        Ok(out)
    }

    /// Mean squared error of `forward(x)` against `target`, with its
    /// gradient for every parameter.
    pub fn loss_and_grads(&self, x: &Tensor, target: &Tensor) -> Result<(f64, Vec<Tensor>)> {
        let tape = Tape::new();
        let params = self.bind(&tape, true);
        let xv = tape.constant(x.clone());
        let tv = tape.constant(target.clone());
        let y = self.trace(&tape, &params, xv)?;
        let loss = tape.mse(y, tv)?;
        let value = tape.value(loss).as_real()?[0];
        let mut grads = tape.backward(loss)?;
        let g = params
            .iter()
            .zip(&self.params)
            .map(|(&v, p)| {
                grads.take(v).unwrap_or_else(|| {
                    if p.is_complex() {
                        Tensor::complex_zeros(p.shape())
                    } else {
                        Tensor::zeros(p.shape())
                    }
                })
            })
            .collect();
        Ok((value, g))
    }
}
