//! The 15-item POI / grid-function taxonomy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Label used for grids with no POIs and no override.
pub const UNASSIGNED: &str = "Unassigned";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FunctionType {
    BusinessOffice,
    CommercialServices,
    Culture,
    DiningServices,
    Education,
    FinancialServices,
    GreenSpace,
    Healthcare,
    Industrial,
    LifeServices,
    PublicServices,
    ResearchInstitutions,
    Residential,
    SportsRecreation,
    Traffic,
}

impl FunctionType {
    pub const ALL: [FunctionType; 15] = [
        FunctionType::BusinessOffice,
        FunctionType::CommercialServices,
        FunctionType::Culture,
        FunctionType::DiningServices,
        FunctionType::Education,
        FunctionType::FinancialServices,
        FunctionType::GreenSpace,
        FunctionType::Healthcare,
        FunctionType::Industrial,
        FunctionType::LifeServices,
        FunctionType::PublicServices,
        FunctionType::ResearchInstitutions,
        FunctionType::Residential,
        FunctionType::SportsRecreation,
        FunctionType::Traffic,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FunctionType::BusinessOffice => "Business Office",
            FunctionType::CommercialServices => "Commercial Services",
            FunctionType::Culture => "Culture",
            FunctionType::DiningServices => "Dining Services",
            FunctionType::Education => "Education",
            FunctionType::FinancialServices => "Financial Services",
            FunctionType::GreenSpace => "Green Space",
            FunctionType::Healthcare => "Healthcare",
            FunctionType::Industrial => "Industrial",
            FunctionType::LifeServices => "Life Services",
            FunctionType::PublicServices => "Public Services",
            FunctionType::ResearchInstitutions => "Research Institutions",
            FunctionType::Residential => "Residential",
            FunctionType::SportsRecreation => "Sports Recreation",
            FunctionType::Traffic => "Traffic",
        }
    }
}

impl fmt::Display for FunctionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FunctionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FunctionType::ALL
            .into_iter()
            .find(|f| f.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown function category `{s}`"))
    }
}

impl TryFrom<String> for FunctionType {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FunctionType> for String {
    fn from(f: FunctionType) -> Self {
        f.label().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip_and_are_sorted() {
        for f in FunctionType::ALL {
            assert_eq!(f.label().parse::<FunctionType>().unwrap(), f);
        }
        let labels: Vec<_> = FunctionType::ALL.iter().map(|f| f.label()).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
        assert!("Spaceport".parse::<FunctionType>().is_err());
        assert_eq!("green space".parse::<FunctionType>().unwrap(), FunctionType::GreenSpace);
    }
}
