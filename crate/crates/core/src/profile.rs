//! UI passwords derived from a user profile.
//!
//! A question bank holds `k` questions with `n` choices each; the user's
//! answers pick one cursor symbol per question. At login the questions are
//! visited in a random order, and the cursor board shows the skin of the
//! question being asked, so the user always knows which answer to align.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub const BANK_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("unsupported question bank version {0}")]
    Version(u32),
    #[error("question bank has no questions")]
    NoQuestions,
    #[error("question {question} has {got} choices, expected {n}")]
    ChoiceCount { question: usize, got: usize, n: usize },
    #[error("skin {0:?} is used by more than one question")]
    DuplicateSkin(String),
    #[error("expected {expected} answers, got {got}")]
    AnswerCount { expected: usize, got: usize },
    #[error("answer {answer} to question {question} outside 1..={n}")]
    AnswerRange {
        question: usize,
        answer: usize,
        n: usize,
    },
    #[error("step {step} out of range for {k} questions")]
    StepRange { step: usize, k: usize },
    #[error("question order is not a permutation of 0..{0}")]
    BadOrder(usize),
    #[error("malformed question bank: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub label: String,
    pub skin: String,
    pub choices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBank")]
pub struct ProfileQuestionBank {
    version: u32,
    n: usize,
    questions: Vec<Question>,
}

#[derive(Deserialize)]
struct RawBank {
    version: u32,
    n: usize,
    questions: Vec<Question>,
}

impl TryFrom<RawBank> for ProfileQuestionBank {
    type Error = ProfileError;

    fn try_from(raw: RawBank) -> Result<Self, Self::Error> {
        if raw.version != BANK_VERSION {
            return Err(ProfileError::Version(raw.version));
        }
        ProfileQuestionBank::new(raw.n, raw.questions)
    }
}

impl ProfileQuestionBank {
    pub fn new(n: usize, questions: Vec<Question>) -> Result<Self, ProfileError> {
        if questions.is_empty() {
            return Err(ProfileError::NoQuestions);
        }
        let mut skins = BTreeSet::new();
        for (i, q) in questions.iter().enumerate() {
            if q.choices.len() != n {
                return Err(ProfileError::ChoiceCount {
                    question: i,
                    got: q.choices.len(),
                    n,
                });
            }
            if !skins.insert(q.skin.as_str()) {
                return Err(ProfileError::DuplicateSkin(q.skin.clone()));
            }
        }
        Ok(ProfileQuestionBank {
            version: BANK_VERSION,
            n,
            questions,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        serde_json::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bank serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.questions.len()
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    /// Check answers (1-based) and convert them to cursor symbol indices in
    /// question order.
    pub fn answer_symbols(&self, answers: &ProfileAnswerSet) -> Result<Vec<usize>, ProfileError> {
        if answers.answers.len() != self.k() {
            return Err(ProfileError::AnswerCount {
                expected: self.k(),
                got: answers.answers.len(),
            });
        }
        answers
            .answers
            .iter()
            .enumerate()
            .map(|(question, &answer)| {
                if (1..=self.n).contains(&answer) {
                    Ok(answer - 1)
                } else {
                    Err(ProfileError::AnswerRange {
                        question,
                        answer,
                        n: self.n,
                    })
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProfileAnswerSet {
    pub answers: Vec<usize>,
}

impl ProfileAnswerSet {
    pub fn new(answers: Vec<usize>) -> Self {
        ProfileAnswerSet { answers }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedUiPassword {
    /// Cursor symbol indices, one per step.
    pub ui_password: Vec<usize>,
    /// Question asked at each step (0-based question indices).
    pub question_order: Vec<usize>,
}

/// A uniformly random question order drawn from `rng`.
pub fn draw_order<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    order
}

pub fn generate_ui_password(
    bank: &ProfileQuestionBank,
    answers: &ProfileAnswerSet,
    permutation_seed: u64,
) -> Result<GeneratedUiPassword, ProfileError> {
    let symbols = bank.answer_symbols(answers)?;
    let question_order = draw_order(bank.k(), &mut rng::seeded(permutation_seed));
    let ui_password = question_order.iter().map(|&q| symbols[q]).collect();
    Ok(GeneratedUiPassword {
        ui_password,
        question_order,
    })
}

pub fn skin_for_step<'a>(
    bank: &'a ProfileQuestionBank,
    question_order: &[usize],
    step_index: usize,
) -> Result<&'a str, ProfileError> {
    let k = bank.k();
    if question_order.len() != k || !is_permutation(question_order) {
        return Err(ProfileError::BadOrder(k));
    }
    let q = question_order
        .get(step_index)
        .ok_or(ProfileError::StepRange { step: step_index, k })?;
    Ok(&bank.questions[*q].skin)
}

pub(crate) fn is_permutation(order: &[usize]) -> bool {
    let mut seen = vec![false; order.len()];
    order
        .iter()
        .all(|&q| q < seen.len() && !std::mem::replace(&mut seen[q], true))
}
