//! First-name gazetteer for the contextual name recogniser.

use std::collections::HashSet;
use std::sync::LazyLock;

const FIRST_NAMES: &[&str] = &[
    // names used by the corpus generator
    "John",
    "Maria",
    "Wei",
    "Aisha",
    "Lars",
    "Alice",
    "Bob",
    "Carlos",
    "Priya",
    "Yuki",
    // common given names
    "Aaron",
    "Abigail",
    "Adam",
    "Adrian",
    "Ahmed",
    "Aiden",
    "Alan",
    "Albert",
    "Alejandro",
    "Alex",
    "Alexander",
    "Alexandra",
    "Ali",
    "Alicia",
    "Allison",
    "Amanda",
    "Amber",
    "Amelia",
    "Amy",
    "Ana",
    "Andrea",
    "Andrew",
    "Angela",
    "Anna",
    "Anne",
    "Anthony",
    "Antonio",
    "Ashley",
    "Austin",
    "Ava",
    "Barbara",
    "Benjamin",
    "Beth",
    "Brandon",
    "Brenda",
    "Brian",
    "Brittany",
    "Bruce",
    "Bryan",
    "Caleb",
    "Cameron",
    "Carl",
    "Carla",
    "Carmen",
    "Carol",
    "Caroline",
    "Catherine",
    "Charles",
    "Charlotte",
    "Chen",
    "Chloe",
    "Chris",
    "Christian",
    "Christina",
    "Christine",
    "Christopher",
    "Cynthia",
    "Daniel",
    "Danielle",
    "David",
    "Deborah",
    "Denise",
    "Dennis",
    "Diana",
    "Diego",
    "Dmitri",
    "Donald",
    "Donna",
    "Dorothy",
    "Douglas",
    "Dylan",
    "Edward",
    "Elena",
    "Elijah",
    "Elizabeth",
    "Ella",
    "Emily",
    "Emma",
    "Eric",
    "Erik",
    "Ethan",
    "Eva",
    "Evelyn",
    "Fatima",
    "Fernando",
    "Frances",
    "Frank",
    "Gabriel",
    "Gary",
    "George",
    "Gloria",
    "Gregory",
    "Hannah",
    "Harold",
    "Hassan",
    "Heather",
    "Helen",
    "Henry",
    "Hiroshi",
    "Ian",
    "Isaac",
    "Isabella",
    "Ivan",
    "Jack",
    "Jacob",
    "Jacqueline",
    "James",
    "Jane",
    "Janet",
    "Jason",
    "Javier",
    "Jean",
    "Jeffrey",
    "Jennifer",
    "Jeremy",
    "Jerry",
    "Jessica",
    "Joan",
    "Joe",
    "Jonathan",
    "Jordan",
    "Jorge",
    "Jose",
    "Joseph",
    "Joshua",
    "Joyce",
    "Juan",
    "Judith",
    "Julia",
    "Julie",
    "Justin",
    "Karen",
    "Katherine",
    "Kathleen",
    "Kelly",
    "Kenji",
    "Kenneth",
    "Kevin",
    "Kimberly",
    "Kyle",
    "Laura",
    "Lauren",
    "Leah",
    "Leo",
    "Liam",
    "Linda",
    "Lisa",
    "Logan",
    "Lucas",
    "Lucy",
    "Luis",
    "Madison",
    "Margaret",
    "Maria",
    "Marie",
    "Marilyn",
    "Martha",
    "Mason",
    "Matthew",
    "Megan",
    "Melissa",
    "Michael",
    "Michelle",
    "Mohammed",
    "Nancy",
    "Natalie",
    "Nathan",
    "Nicholas",
    "Nicole",
    "Noah",
    "Olga",
    "Olivia",
    "Oscar",
    "Pablo",
    "Pamela",
    "Patricia",
    "Patrick",
    "Paul",
    "Peter",
    "Rachel",
    "Rahul",
    "Raymond",
    "Rebecca",
    "Richard",
    "Robert",
    "Roger",
    "Ronald",
    "Ruth",
    "Ryan",
    "Samantha",
    "Samuel",
    "Sandra",
    "Sara",
    "Sarah",
    "Scott",
    "Sean",
    "Sofia",
    "Sophia",
    "Stephen",
    "Steven",
    "Susan",
    "Sydney",
    "Teresa",
    "Thomas",
    "Timothy",
    "Tyler",
    "Victoria",
    "Vincent",
    "Walter",
    "William",
    "Yusuf",
    "Zachary",
    "Zoe",
];

static LOOKUP: LazyLock<HashSet<String>> =
    LazyLock::new(|| FIRST_NAMES.iter().map(|n| n.to_ascii_lowercase()).collect());

/// Case-insensitive membership.
pub fn is_first_name(word: &str) -> bool {
    LOOKUP.contains(&word.to_ascii_lowercase())
}

pub fn len() -> usize {
    LOOKUP.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covers_pool_and_common_names() {
        assert!(is_first_name("Aisha"));
        assert!(is_first_name("alice"));
        assert!(!is_first_name("Export"));
        assert!(len() >= 200, "{}", len());
    }
}
