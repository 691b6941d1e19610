use rand::Rng;

use super::params::{glorot_uniform, Binder, ParamStore};
use crate::autodiff::{Graph, NodeId};
use crate::error::Result;
use crate::tensor::Tensor;

/// One direction of an LSTM layer.
///
/// Gate blocks in `W_x`, `W_h` and `b` are stacked as
/// `[input, forget, candidate, output]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmDirection {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub wx: usize,
    pub wh: usize,
    pub b: usize,
}

/// Dropout masks applied to one direction over a whole sequence.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequenceMasks {
    pub input: Option<NodeId>,
    pub recurrent: Option<NodeId>,
}

impl LstmDirection {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let wx = store.push(
            format!("{prefix}.wx"),
            glorot_uniform(4 * hidden_dim, input_dim, rng),
        );
        let wh = store.push(
            format!("{prefix}.wh"),
            glorot_uniform(4 * hidden_dim, hidden_dim, rng),
        );
        let b = store.push(format!("{prefix}.b"), Tensor::zeros(&[4 * hidden_dim]));
        LstmDirection {
            input_dim,
            hidden_dim,
            wx,
            wh,
            b,
        }
    }

    /// Runs the direction over `inputs` in the given order and returns the
    /// hidden output after each input, in the same order as `inputs`.
    pub fn run(
        &self,
        graph: &mut Graph,
        binder: &mut Binder<'_>,
        inputs: &[NodeId],
        masks: SequenceMasks,
    ) -> Result<Vec<NodeId>> {
        let h_dim = self.hidden_dim;
        let wx = binder.bind(graph, self.wx);
        let wh = binder.bind(graph, self.wh);
        let b = binder.bind(graph, self.b);
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut state: Option<(NodeId, NodeId)> = None;
        for &x in inputs {
            let x = match masks.input {
                Some(m) => graph.mul(x, m)?,
                None => x,
            };
            let mut z = graph.matvec(wx, x)?;
            if let Some((h_prev, _)) = state {
                let h_in = match masks.recurrent {
                    Some(m) => graph.mul(h_prev, m)?,
                    None => h_prev,
                };
                let rec = graph.matvec(wh, h_in)?;
                z = graph.add(z, rec)?;
            }
            let z = graph.add(z, b)?;
            let i_pre = graph.slice(z, 0, h_dim)?;
            let f_pre = graph.slice(z, h_dim, h_dim)?;
            let g_pre = graph.slice(z, 2 * h_dim, h_dim)?;
            let o_pre = graph.slice(z, 3 * h_dim, h_dim)?;
            let i = graph.sigmoid(i_pre);
            let f = graph.sigmoid(f_pre);
            let g = graph.tanh(g_pre);
            let o = graph.sigmoid(o_pre);
            let ig = graph.mul(i, g)?;
            let c = match state {
                Some((_, c_prev)) => {
                    let fc = graph.mul(f, c_prev)?;
                    graph.add(fc, ig)?
                }
                None => ig,
            };
            let tc = graph.tanh(c);
            let h = graph.mul(o, tc)?;
            outputs.push(h);
            state = Some((h, c));
        }
        Ok(outputs)
    }

    /// Runs over `inputs` from last to first. Output `k` is the state after
    /// consuming inputs `n-1 ..= k`, so outputs stay indexed by position.
    pub fn run_reversed(
        &self,
        graph: &mut Graph,
        binder: &mut Binder<'_>,
        inputs: &[NodeId],
        masks: SequenceMasks,
    ) -> Result<Vec<NodeId>> {
        let reversed: Vec<NodeId> = inputs.iter().rev().copied().collect();
        let mut out = self.run(graph, binder, &reversed, masks)?;
        out.reverse();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_inputs(graph: &mut Graph, n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
        (0..n)
            .map(|_| {
                let v = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
                graph.constant(Tensor::vector(v))
            })
            .collect()
    }

    #[test]
    fn zero_parameters_keep_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let dir = LstmDirection::init(&mut store, "d", 3, 4, &mut rng);
        for i in 0..store.len() {
            store.get_mut(i).data_mut().fill(0.0);
        }
        let mut g = Graph::new();
        let mut binder = Binder::new(&store);
        let xs: Vec<_> = (0..5).map(|_| g.constant(Tensor::zeros(&[3]))).collect();
        for h in dir.run(&mut g, &mut binder, &xs, SequenceMasks::default()).unwrap() {
            assert!(g.value(h).data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn outputs_stay_in_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let dir = LstmDirection::init(&mut store, "d", 6, 5, &mut rng);
        let mut g = Graph::new();
        let mut binder = Binder::new(&store);
        let xs = random_inputs(&mut g, 12, 6, &mut rng);
        for h in dir.run(&mut g, &mut binder, &xs, SequenceMasks::default()).unwrap() {
            assert!(g.value(h).data().iter().all(|&v| v > -1.0 && v < 1.0));
        }
    }

    #[test]
    fn reversed_run_matches_forward_run_on_reversed_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        let dir = LstmDirection::init(&mut store, "d", 4, 3, &mut rng);
        for trial in 0..5 {
            let mut g = Graph::new();
            let mut binder = Binder::new(&store);
            let xs = random_inputs(&mut g, 3 + trial, 4, &mut rng);
            let back = dir
                .run_reversed(&mut g, &mut binder, &xs, SequenceMasks::default())
                .unwrap();
            let rev: Vec<_> = xs.iter().rev().copied().collect();
            let fwd = dir.run(&mut g, &mut binder, &rev, SequenceMasks::default()).unwrap();
            let n = xs.len();
            for k in 0..n {
                assert_eq!(g.value(back[k]), g.value(fwd[n - 1 - k]));
            }
        }
    }
}
