use crate::FixtureRecord;

const FIG3_DESCRIPTION: &str = "\"This paper discusses how international donors can promote the development of transboundary water management. It assumes, first, that cooperation will take place whenever the major stakeholders consider cooperation to be a better option than non-cooperation. The perceptions and motivations of the stakeholders are therefore crucial. Secondly, this paper assumes that the major stakeholders are not 'states', but specific groups and individuals: individual politicians, sectoral government bureaucracies, regional and local governments, farmers, electricity companies, etc. Some of these may be involved in the international negotiations themselves, others may be needed to get international agreements ratified or implemented, and still others may be affected by transboundary water management but lack the means to exert any influence.\" (author's abstract)";

/// The SSOAR sample record used throughout the docs and tests.
pub fn sample_record() -> FixtureRecord {
    FixtureRecord::new("oai:geis.izsoz.de:19389", "2011-01-10T13:46:00Z")
        .set("SSOAR")
        .field("identifier", "http://nbn-resolving.de/urn:nbn:de:0168-ssoar-193894")
        .field("title", "How can international donors promote transboundary water management?")
        .field("creator", "Mostert, Erik")
        .field("creator", "Deutsches Institut für Entwicklungspolitik gGmbH")
        .field("subject", "Political science (320)")
        .field("subject", "Life sciences, biology (570)")
        .field("subject", "International Relations, International Politics, Development Policy (10505)")
        .field("subject", "Ecology, Environment (20900)")
        .field("subject", "Management; Afrika; Entwicklung; Entwicklungsland; Akteur; Wasser")
        .field("source", "Bonn")
        .field("source", "DIE Discussion Paper (1860-0441) 8/2005")
        .field("description", FIG3_DESCRIPTION)
        .field("language", "English")
        .field("rights", "Deposit Licence - No Redistribution, No Modifications")
        .field("contributor", "SSOAR - Social Science Open Access Repository")
        .field("date", "10.01.2011 13:46")
}

fn rec(n: u32, datestamp: &str, date: Option<&str>, title: &str, description: &str, subjects: &str) -> FixtureRecord {
    let mut r = FixtureRecord::new(&format!("oai:fixture.example.org:{n:03}"), datestamp)
        .set("FIX")
        .field("title", title)
        .field("creator", "Fixture, Author");
    if !description.is_empty() {
        r = r.field("description", description);
    }
    for s in subjects.split('|') {
        r = r.field("subject", s);
    }
    if let Some(d) = date {
        r = r.field("date", d);
    }
    r
}

/// Fifteen records: the SSOAR sample, German money and finance papers,
/// English labour market papers, water and environment papers, and two
/// unrelated ones. Datestamps run from 2009 to 2011; one record has no
/// `dc:date`.
pub fn default_records() -> Vec<FixtureRecord> {
    vec![
        sample_record(),
        rec(
            1,
            "2009-03-02T09:00:00Z",
            Some("2009"),
            "Geld und Kredit in der Geldpolitik der Zentralbank",
            "Die Zentralbank steuert Geld und Kredit über den Leitzins.",
            "Geldpolitik|Zentralbank|Inflation",
        ),
        rec(
            2,
            "2009-07-15T10:30:00Z",
            Some("2009-07-01"),
            "Die Rolle des Geldes im Wirtschaftskreislauf",
            "Geld als Tauschmittel und Wertaufbewahrungsmittel.",
            "Geldpolitik|Geldtheorie",
        ),
        rec(
            3,
            "2010-02-01T08:00:00Z",
            Some("2010"),
            "Geld, Inflation und Preisstabilität",
            "Inflation entsteht, wenn die Geldmenge schneller wächst als die Produktion.",
            "Inflation|Geldpolitik",
        ),
        rec(
            4,
            "2010-06-20T12:00:00Z",
            Some("2010-06-20"),
            "Öffentliche Finanzen: Geld für die Kommunen",
            "Kommunen brauchen Geld für Schulen und Straßen.",
            "Finanzpolitik|Kommune",
        ),
        rec(
            5,
            "2010-11-05T16:45:00Z",
            Some("2010"),
            "Banken und Finanzmärkte nach der Krise",
            "Regulierung der Banken nach der Finanzkrise.",
            "Finanzmarkt|Bank",
        ),
        rec(
            6,
            "2009-05-11T11:00:00Z",
            Some("2009"),
            "Unemployment of young people in Europe",
            "Youth unemployment rates of young people and the supply of apprenticeships.",
            "labour market policy; training position",
        ),
        rec(
            7,
            "2010-03-03T09:15:00Z",
            Some("2010"),
            "Young people and unemployment: training positions in the dual system",
            "Vocational training places for young people reduce unemployment.",
            "training position|vocational training",
        ),
        rec(
            8,
            "2011-02-14T14:00:00Z",
            Some("2011"),
            "Labour market policy against unemployment of young people",
            "Active labour market programmes for young people.",
            "labour market policy",
        ),
        rec(
            9,
            "2011-04-01T07:30:00Z",
            Some("2011"),
            "Long-term unemployment among older workers",
            "Older workers face long spells of unemployment.",
            "labour market policy|older worker",
        ),
        rec(
            10,
            "2009-09-09T09:09:09Z",
            Some("2009"),
            "Transboundary water management in the Nile basin",
            "Cooperation on water between riparian states.",
            "Wasser; Management|International Relations, International Politics, Development Policy (10505)",
        ),
        rec(
            11,
            "2010-08-08T08:08:08Z",
            Some("2010"),
            "Climate change and the ecology of rivers",
            "River ecosystems under climate stress.",
            "Ecology, Environment (20900)",
        ),
        rec(
            12,
            "2011-05-05T05:05:05Z",
            Some("2011"),
            "Water scarcity and agriculture",
            "Irrigation competes with households for scarce water.",
            "Wasser|agriculture",
        ),
        rec(
            13,
            "2011-06-30T18:00:00Z",
            None,
            "Pension reform and the welfare state",
            "Reforming public pensions in ageing societies.",
            "social policy|pension",
        ),
        rec(
            14,
            "2011-07-07T07:07:07Z",
            Some("2011"),
            "Migration and the integration of young refugees",
            "Schools and the integration of refugee children.",
            "migration|integration",
        ),
    ]
}
