pub mod oracle;
pub mod toy_cases;
