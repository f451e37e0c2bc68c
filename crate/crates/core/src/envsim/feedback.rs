//! Stochastic feedback drawn from a hidden preference vector.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::conmnl::mnl_probs;
use crate::glm::{Feature, LinkFunction};
use crate::policy::{Choice, FeedbackOracle};

/// Bernoulli draw of `mu((first - second)^T theta)`.
pub fn sample_duel_feedback<R: Rng + ?Sized>(
    link: LinkFunction,
    theta: &Feature,
    first: &Feature,
    second: &Feature,
    rng: &mut R,
) -> bool {
    let z = first.dot(theta) - second.dot(theta);
    rng.random::<f64>() < link.mu(z)
}

/// Bernoulli draw of `sigmoid(x^T theta)`.
pub fn sample_click_feedback<R: Rng + ?Sized>(theta: &Feature, x: &Feature, rng: &mut R) -> bool {
    rng.random::<f64>() < LinkFunction::Sigmoid.mu(x.dot(theta))
}

/// Categorical draw over the offered items then the outside option.
pub fn sample_choice_feedback<R: Rng + ?Sized>(theta: &Feature, offered: &[Feature], rng: &mut R) -> Choice {
    if offered.is_empty() {
        return Choice::Outside;
    }
    let p = mnl_probs(theta, offered);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, pi) in p.items.iter().enumerate() {
        acc += pi;
        if u < acc {
            return Choice::Item(i);
        }
    }
    Choice::Outside
}

/// One user's answers for one round, with separate arm and key-term streams.
pub struct SimulatedUser<'a> {
    pub link: LinkFunction,
    pub theta: &'a Feature,
    pub arm_rng: ChaCha8Rng,
    pub keyterm_rng: ChaCha8Rng,
}

impl FeedbackOracle for SimulatedUser<'_> {
    fn duel_arms(&mut self, first: &Feature, second: &Feature) -> bool {
        sample_duel_feedback(self.link, self.theta, first, second, &mut self.arm_rng)
    }

    fn duel_keyterms(&mut self, first: &Feature, second: &Feature) -> bool {
        sample_duel_feedback(self.link, self.theta, first, second, &mut self.keyterm_rng)
    }

    fn click(&mut self, x: &Feature) -> bool {
        sample_click_feedback(self.theta, x, &mut self.arm_rng)
    }

    fn choose_arms(&mut self, offered: &[Feature]) -> Choice {
        sample_choice_feedback(self.theta, offered, &mut self.arm_rng)
    }

    fn choose_keyterms(&mut self, offered: &[Feature]) -> Choice {
        sample_choice_feedback(self.theta, offered, &mut self.keyterm_rng)
    }
}
