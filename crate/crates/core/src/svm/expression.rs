use std::fmt;
use std::str::FromStr;

/// The six basic expressions, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expression {
    Anger,
    Fear,
    Disgust,
    Joy,
    Sadness,
    Surprise,
}

impl Expression {
    pub const ALL: [Expression; 6] = [
        Expression::Anger,
        Expression::Fear,
        Expression::Disgust,
        Expression::Joy,
        Expression::Sadness,
        Expression::Surprise,
    ];

    /// Row order of the accuracy report.
    pub const REPORT_ORDER: [Expression; 6] = [
        Expression::Anger,
        Expression::Disgust,
        Expression::Fear,
        Expression::Joy,
        Expression::Sadness,
        Expression::Surprise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Expression> {
        Expression::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Expression::Anger => "Anger",
            Expression::Fear => "Fear",
            Expression::Disgust => "Disgust",
            Expression::Joy => "Joy",
            Expression::Sadness => "Sadness",
            Expression::Surprise => "Surprise",
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownExpression(pub String);

impl fmt::Display for UnknownExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown expression {:?}", self.0)
    }
}

impl std::error::Error for UnknownExpression {}

impl FromStr for Expression {
    type Err = UnknownExpression;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownExpression(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Expression::ALL {
            assert_eq!(e.name().parse::<Expression>().unwrap(), e);
            assert_eq!(Expression::from_index(e.index()), Some(e));
        }
        assert_eq!("joy".parse::<Expression>().unwrap(), Expression::Joy);
        assert!("Contempt".parse::<Expression>().is_err());
    }
}
